"""Orthogonal polynomials on the line and on the unit circle.

Real families: probabilists' Hermite ``He_n``, orthonormal Legendre
``L_n = sqrt(2n+1) P_n`` and Chebyshev ``U_n``. Circle families: orthonormal
Rogers-Szego polynomials and the OPUC of the arc law (see ``laws.Arc``).
Coefficient vectors are always lowest degree first.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import NumericalError, ValidationError
from .precision import EXTENDED_DPS

CIRCLE_POINTS = 2 ** 14
ARC_GAMMA_MAX = 0.99


def _check_n(n):
    if int(n) != n or n < 0:
        raise ValidationError(f"degree must be a nonnegative integer, got {n!r}")
    return int(n)


def _check_q(q):
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValidationError(f"q must lie in (0, 1), got {q!r}")
    return q


# ---------------------------------------------------------------------------
# q-series
# ---------------------------------------------------------------------------

def q_pochhammer(q, n=math.inf):
    """``(q)_n = (1-q)(1-q^2)...(1-q^n)``; ``n=inf`` gives the Euler function."""
    q = _check_q(q)
    if n == math.inf:
        log = 0.0
        k = 1
        while True:
            qk = q ** k
            if qk < 1e-17:
                break
            log += math.log1p(-qk)
            k += 1
        return math.exp(log)
    n = _check_n(n)
    return math.exp(math.fsum(math.log1p(-q ** k) for k in range(1, n + 1)))


def euler_function_bound(q):
    """``exp(pi^2 / (6 t))`` with ``q = exp(-t)``: the growth rate of ``1/(q)_inf`` as ``q -> 1``."""
    q = _check_q(q)
    return math.exp(math.pi ** 2 / (6.0 * -math.log(q)))


def q_binomial(n, j, q):
    """Gaussian binomial ``[n choose j]_q``."""
    n, j = _check_n(n), _check_n(j)
    if j > n:
        return 0.0
    q = _check_q(q)
    return q_pochhammer(q, n) / (q_pochhammer(q, j) * q_pochhammer(q, n - j))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _hermite_coeffs_exact(n):
    out = [Fraction(0)] * (n + 1)
    for k in range(n // 2 + 1):
        out[n - 2 * k] = Fraction((-1) ** k * math.factorial(n), math.factorial(k) * math.factorial(n - 2 * k) * 2 ** k)
    return tuple(out)


@lru_cache(maxsize=None)
def _legendre_coeffs_exact(n):
    """Coefficients of the classical ``P_n``."""
    out = [Fraction(0)] * (n + 1)
    for k in range(n // 2 + 1):
        out[n - 2 * k] = Fraction((-1) ** k * math.comb(n, k) * math.comb(2 * n - 2 * k, n), 2 ** n)
    return tuple(out)


@lru_cache(maxsize=None)
def _chebyshev_u_coeffs_exact(n):
    out = [Fraction(0)] * (n + 1)
    for k in range(n // 2 + 1):
        out[n - 2 * k] = Fraction((-1) ** k * math.comb(n - k, k) * 2 ** (n - 2 * k))
    return tuple(out)


@dataclass(frozen=True)
class PolySeq:
    """A polynomial family; ``q`` is only used by ``rogers_szego``."""

    family: str
    q: float = None

    FAMILIES = ("hermite", "legendre_scaled", "chebyshev_u", "rogers_szego")

    def __post_init__(self):
        fam = str(self.family).lower()
        if fam not in self.FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {self.FAMILIES}")
        object.__setattr__(self, "family", fam)
        if fam == "rogers_szego":
            object.__setattr__(self, "q", _check_q(self.q))

    @property
    def on_circle(self):
        return self.family == "rogers_szego"

    def coefficients(self, n):
        """Dense coefficient vector of the ``n``-th member, lowest degree first."""
        n = _check_n(n)
        if self.family == "hermite":
            return np.array([float(c) for c in _hermite_coeffs_exact(n)])
        if self.family == "legendre_scaled":
            return math.sqrt(2 * n + 1) * np.array([float(c) for c in _legendre_coeffs_exact(n)])
        if self.family == "chebyshev_u":
            return np.array([float(c) for c in _chebyshev_u_coeffs_exact(n)])
        return rogers_szego_coefficients(self.q, n)

    def eval_closed_form(self, n, point):
        """Evaluate from the explicit coefficient sum (Horner)."""
        c = self.coefficients(n)
        point = np.asarray(point, dtype=complex if self.on_circle else float)
        out = np.zeros_like(point)
        for coef in c[::-1]:
            out = out * point + coef
        return out

    def eval(self, n, point):
        """Evaluate by the three-term (real) or Szego (circle) recurrence."""
        n = _check_n(n)
        if self.on_circle:
            return _rogers_szego_recurrence(self.q, n, point)
        x = np.asarray(point, dtype=float)
        prev, cur = np.zeros_like(x), np.ones_like(x)
        if self.family == "hermite":
            for k in range(n):
                prev, cur = cur, x * cur - k * prev
            return cur
        if self.family == "chebyshev_u":
            for k in range(n):
                prev, cur = cur, 2 * x * cur - (prev if k else 0.0)
            return cur
        for k in range(n):
            prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
        return math.sqrt(2 * n + 1) * cur


def eval_poly(seq, n, point):
    return seq.eval(n, point)


def rogers_szego_coefficients(q, n):
    """Row ``n`` of the orthonormal Rogers-Szego coefficient matrix."""
    q = _check_q(q)
    n = _check_n(n)
    scale = q_pochhammer(q, n) ** -0.5
    return np.array([scale * (-1) ** (n - j) * q_binomial(n, j, q) * q ** ((n - j) / 2) for j in range(n + 1)])


def rogers_szego_verblunsky(q, n):
    """Verblunsky coefficient ``alpha_n = (-1)^n q^((n+1)/2)`` of the wrapped Gaussian."""
    return (-1) ** n * q ** ((n + 1) / 2)


def _rogers_szego_recurrence(q, n, z):
    z = np.asarray(z, dtype=complex)
    phi = np.ones_like(z)
    star = np.ones_like(z)
    for k in range(n):
        a = rogers_szego_verblunsky(q, k)
        rho = math.sqrt(1 - a * a)
        phi, star = (z * phi - a * star) / rho, (star - a * z * phi) / rho
    return phi


def orthonormality_defect(seq, n_max):
    """``max_{j,k <= n_max} |<p_j, p_k> - delta_jk|`` under the family's weight.

    Hermite inner products are divided by ``sqrt(j! k!)``.
    """
    n_max = _check_n(n_max)
    if n_max > 20:
        raise ValidationError("n_max must be <= 20")
    if seq.family == "hermite":
        x, w = np.polynomial.hermite_e.hermegauss(n_max + 2)
        w = w / w.sum()
        norms = np.array([math.sqrt(math.factorial(j)) for j in range(n_max + 1)])
    elif seq.family == "legendre_scaled":
        x, w = np.polynomial.legendre.leggauss(n_max + 2)
        w = w / 2
        norms = np.ones(n_max + 1)
    elif seq.family == "chebyshev_u":
        N = n_max + 2
        t = np.arange(1, N + 1) * math.pi / (N + 1)
        x, w = np.cos(t), 2.0 / (N + 1) * np.sin(t) ** 2
        norms = np.ones(n_max + 1)
    else:
        theta = 2 * math.pi * np.arange(CIRCLE_POINTS) / CIRCLE_POINTS
        x = np.exp(1j * theta)
        w = wrapped_gaussian_density(theta, -math.log(seq.q)) * 2 * math.pi / CIRCLE_POINTS
        norms = np.ones(n_max + 1)
    vals = np.array([seq.eval(j, x) / norms[j] for j in range(n_max + 1)])
    gram = (vals * w[None, :]) @ vals.conj().T
    return float(np.max(np.abs(gram - np.eye(n_max + 1))))


def wrapped_gaussian_density(theta, variance):
    """Density of ``sqrt(variance) Z mod 2 pi`` on ``[0, 2 pi)``."""
    theta = np.asarray(theta, dtype=float)
    if variance < 1.0:
        J = int(math.ceil(8 * math.sqrt(variance) / (2 * math.pi))) + 1
        js = np.arange(-J, J + 1)
        z = (theta[..., None] - 2 * math.pi * js) / math.sqrt(variance)
        return np.exp(-0.5 * z * z).sum(-1) / math.sqrt(2 * math.pi * variance)
    K = int(math.ceil(math.sqrt(2 * 45 / variance))) + 1
    ks = np.arange(1, K + 1)
    return (1 + 2 * (np.exp(-0.5 * ks * ks * variance) * np.cos(theta[..., None] * ks)).sum(-1)) / (2 * math.pi)


# ---------------------------------------------------------------------------
# Coefficient matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffMatrix:
    """Lower-triangular ``R`` with ``phi_n(z) = sum_j R[n, j] z^j``."""

    R: np.ndarray

    @property
    def order(self):
        return self.R.shape[0]

    @property
    def frobenius_sq(self):
        return float(np.sum(np.abs(self.R) ** 2))

    @property
    def leading(self):
        return np.real(np.diag(self.R))

    def to_csv_rows(self):
        rows = []
        for n in range(self.order):
            for j in range(n + 1):
                rows.append((n, j, float(np.real(self.R[n, j])), float(np.imag(self.R[n, j]))))
        return rows


def rogers_szego_coeff_matrix(q, m):
    R = np.zeros((m + 1, m + 1))
    for n in range(m + 1):
        R[n, : n + 1] = rogers_szego_coefficients(q, n)
    return CoeffMatrix(R)


def rogers_szego_frobenius_bound(q, m):
    """``(m+1)^2 exp(2 / (1 - sqrt q)) / (q)_inf`` bounding ``||R||_F^2``."""
    q = _check_q(q)
    return (m + 1) ** 2 * math.exp(2.0 / (1.0 - math.sqrt(q))) / q_pochhammer(q)


@dataclass(frozen=True)
class ArcOpuc:
    gamma: float
    r_chain: tuple
    kappa_sq: tuple
    frobenius_bound: float
    closed_bound: float


def arc_r_chain(x, m):
    """``r_0 = x``, ``r_n = x - 1/(4 r_{n-1})``: ratios ``p_{n+1}(x)/p_n(x)`` of monic ``2^-n U_n``."""
    r = [float(x)]
    for _ in range(m):
        r.append(x - 1.0 / (4.0 * r[-1]))
    return tuple(r)


def arc_opuc(gamma, m):
    """Leading coefficients of the arc OPUC and the Frobenius bound ``sum 4^n kappa_n^2``."""
    gamma = float(gamma)
    m = _check_n(m)
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must lie in (0, 1), got {gamma!r}")
    if gamma > ARC_GAMMA_MAX:
        raise ValidationError(f"gamma={gamma!r} exceeds the supported limit {ARC_GAMMA_MAX}")
    r = arc_r_chain(1.0 / gamma, m)
    # kappa_n^-2 = 4^n gamma^(2n+1) r_n h_n with h_n = 4^-n
    kappa_sq = tuple(1.0 / (gamma ** (2 * n + 1) * r[n]) for n in range(m + 1))
    bound = math.fsum(4.0 ** n * k for n, k in enumerate(kappa_sq))
    ratio = (2.0 / gamma) ** 2
    closed = 2.0 * ((2.0 / gamma) ** (2 * m + 2) - 1.0) / (ratio - 1.0)
    return ArcOpuc(gamma, r, kappa_sq, bound, closed)


def _laurent_mul(a, b):
    return np.convolve(a, b)


def arc_coeff_matrix(gamma, m):
    """Explicit orthonormal OPUC coefficients of the arc law centred at 0.

    Built from monic Chebyshev-U polynomials on the translated arc around
    ``pi`` and mapped back with ``Phi_n(z) = (-1)^n Psi_n(-z)``.
    """
    info = arc_opuc(gamma, m)
    with mpmath.workdps(2 * EXTENDED_DPS):
        g = mpmath.mpf(gamma)
        # monic p_n = 2^-n U_n as exact rationals
        p = [[c / 2 ** n for c in _chebyshev_u_coeffs_exact(n)] for n in range(m + 2)]
        xinv = 1 / g
        pv = [mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * xinv ** k for k, c in enumerate(pn)) for pn in p]
        R = mpmath.matrix(m + 1, m + 1)
        for n in range(m + 1):
            ratio = pv[n + 1] / pv[n]
            # (2g)^{n+1} s^n (s p_{n+1}(x) - ratio p_n(x)), x = (s + 1/s)/(2g), as a Laurent polynomial in s
            num = _poly_in_s(p[n + 1], g, n + 1, n + 1)
            sub = _poly_in_s(p[n], g, n + 1, n)
            # both are polynomials in s of degree 2n+2 (index = power of s)
            size = max(len(num), len(sub))
            poly = [(num[i] if i < len(num) else 0) - ratio * (sub[i] if i < len(sub) else 0) for i in range(size)]
            # only even powers of s survive; convert to z = s^2
            zpoly = [poly[i] for i in range(0, size, 2)]
            odd = max((abs(poly[i]) for i in range(1, size, 2)), default=0)
            scale_ref = max(abs(c) for c in zpoly)
            if odd > mpmath.mpf(10) ** (-EXTENDED_DPS) * scale_ref:
                raise NumericalError("arc OPUC construction left odd powers of z^(1/2)")
            # divide by (z - 1)
            quot = _divide_by_z_minus_1(zpoly)
            kappa = 1 / mpmath.sqrt(g ** (2 * n + 1) * _r_mp(xinv, n))
            for j in range(n + 1):
                R[n, j] = kappa * (-1) ** (n + j) * quot[j]
        out = np.array([[float(R[i, j]) for j in range(m + 1)] for i in range(m + 1)])
    return CoeffMatrix(out)


def _r_mp(x, n):
    r = x
    for _ in range(n):
        r = x - 1 / (4 * r)
    return r


def _poly_in_s(pcoeffs, g, total, shift):
    """``(2g)^total s^shift p((s + 1/s)/(2g))`` as coefficients of powers of ``s``.

    ``shift`` is chosen so that all powers are nonnegative.
    """
    deg = len(pcoeffs) - 1
    out = [mpmath.mpf(0)] * (shift + deg + 1)
    for k, c in enumerate(pcoeffs):
        if c == 0:
            continue
        coef = mpmath.mpf(c.numerator) / c.denominator * (2 * g) ** (total - k)
        # (s + 1/s)^k = sum_i C(k, i) s^(k - 2i)
        for i in range(k + 1):
            power = shift + k - 2 * i
            out[power] += coef * math.comb(k, i)
    return out


def _divide_by_z_minus_1(c):
    """Synthetic division of ``sum c_i z^i`` by ``z - 1``; the remainder must vanish."""
    deg = len(c) - 1
    q = [mpmath.mpf(0)] * deg
    acc = mpmath.mpf(0)
    for i in range(deg, 0, -1):
        acc = c[i] + acc
        q[i - 1] = acc
    rem = c[0] + acc
    if abs(rem) > mpmath.mpf(10) ** (-EXTENDED_DPS) * max(abs(v) for v in c):
        raise NumericalError("arc OPUC numerator is not divisible by z - 1")
    return q


def opuc_from_moments(trig_moments, m, precision="double"):
    """Orthonormal OPUC coefficients from ``t_k = E[z^k]``, ``k = 0..m``.

    ``G[j, k] = <z^j, z^k> = t_{j-k}`` factors as ``L L^*``; ``R = L^{-1}``.
    """
    t = list(trig_moments)
    if len(t) < m + 1:
        raise ValidationError("need trigonometric moments t_0..t_m")
    if str(precision) in ("extended", "Precision.EXTENDED"):
        with mpmath.workdps(EXTENDED_DPS):
            G = mpmath.matrix(m + 1, m + 1)
            for j in range(m + 1):
                for k in range(m + 1):
                    d = j - k
                    G[j, k] = mpmath.mpc(t[d]) if d >= 0 else mpmath.conj(mpmath.mpc(t[-d]))
            try:
                L = mpmath.cholesky(G)
            except ZeroDivisionError:
                raise NumericalError("moment matrix is not positive definite") from None
            R = mpmath.inverse(L)
            out = np.array([[complex(R[i, j]) for j in range(m + 1)] for i in range(m + 1)])
        return CoeffMatrix(np.tril(out))
    G = np.empty((m + 1, m + 1), dtype=complex)
    for j in range(m + 1):
        for k in range(m + 1):
            d = j - k
            G[j, k] = t[d] if d >= 0 else np.conj(t[-d])
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise NumericalError("moment matrix is not positive definite; retry in extended precision") from None
    R = np.linalg.solve(L, np.eye(m + 1))
    return CoeffMatrix(np.tril(R))


def opuc_coeff_matrix(family, m, **params):
    """``family`` is ``"rogers_szego"`` (needs ``q``) or ``"arc"`` (needs ``gamma`` or ``b``)."""
    m = _check_n(m)
    if m > 40:
        raise ValidationError("m must be <= 40")
    fam = str(family).lower()
    if fam == "rogers_szego":
        return rogers_szego_coeff_matrix(params["q"], m)
    if fam == "arc":
        gamma = params.get("gamma")
        if gamma is None:
            gamma = math.sin(float(params["b"]) / 2)
        return arc_coeff_matrix(gamma, m)
    raise ValidationError(f"unknown OPUC family {family!r}")
