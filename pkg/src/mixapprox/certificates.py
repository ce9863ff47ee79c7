"""Certified lower bounds on the best m-atomic TV approximation error.

The spectral certificate at frequency ``delta`` is

    lambda_min(T_m(delta X)) / (2 (m+1) exp(m^2 delta^2 / 2))

where ``T_m`` is the Toeplitz matrix of trigonometric moments. The smallest
eigenvalue is obtained directly, from the wrapped density, or from the
Frobenius norm of an orthonormal-polynomial coefficient matrix.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy import optimize
from scipy.linalg import toeplitz

from .errors import OutOfRegimeError, UnsupportedLawError, ValidationError
from .laws import (
    Arc,
    Atomic,
    Gaussian,
    Laplace,
    MixingLaw,
    Scaled,
    SubWeibull,
    TruncPareto,
    Uniform,
    subweibull_normalizer,
)
from .orthopoly import (
    _legendre_coeffs_exact,
    arc_coeff_matrix,
    arc_opuc,
    q_pochhammer,
    rogers_szego_coeff_matrix,
)
from .precision import EXTENDED_DPS, Precision, as_precision

ROUTES = ("direct", "wrapped", "ortho")
ROUTE_METHODS = {"direct": "EigenDirect", "wrapped": "EigenWrapped", "ortho": "EigenOrtho"}
WRAP_GRID = 2 ** 12
EIG_FALLBACK = 1e-13
_EPS = float(np.finfo(float).eps)
# laws whose characteristic function is a closed form (entries exact to rounding)
_CLOSED_CHAR = (Atomic, Uniform, Gaussian, Laplace)


def _check_m(m, minimum=0):
    if int(m) != m or m < minimum:
        raise ValidationError(f"m must be an integer >= {minimum}, got {m!r}")
    return int(m)


def _check_delta(delta):
    d = float(delta)
    if not (d > 0 and math.isfinite(d)):
        raise ValidationError(f"delta must be positive and finite, got {delta!r}")
    return d


def _closed_char(law):
    while isinstance(law, Scaled):
        law = law.base
    return isinstance(law, _CLOSED_CHAR)


# ---------------------------------------------------------------------------
# Toeplitz matrix and eigenvalues
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigMomentMatrix:
    """``T[j, k] = t_{k-j}(delta X)`` for ``j, k = 0..m``."""

    matrix: np.ndarray
    delta: float
    m: int
    entry_error: float
    matrix_mp: object = field(default=None, repr=False, compare=False)

    @property
    def order(self):
        return self.m + 1


def trig_moment_matrix(law, m, delta, precision=Precision.DOUBLE):
    m = _check_m(m)
    delta = _check_delta(delta)
    prec = as_precision(precision)
    t = [law.trig_moment(k, delta) for k in range(m + 1)]
    T = toeplitz(np.conj(t), t)
    np.fill_diagonal(T, 1.0)
    closed = _closed_char(law)
    err = 4 * _EPS if closed else 1e-13
    Tmp = None
    if prec is Precision.EXTENDED:
        with mpmath.workdps(EXTENDED_DPS):
            tm = [mpmath.mpc(1)] + [law.char_fn_mp(k * mpmath.mpf(delta)) for k in range(1, m + 1)]
            Tmp = mpmath.matrix(m + 1, m + 1)
            for j in range(m + 1):
                for k in range(m + 1):
                    Tmp[j, k] = tm[k - j] if k >= j else mpmath.conj(tm[j - k])
        if closed:
            err = 1e-30
    return TrigMomentMatrix(T, delta, m, err, Tmp)


def lambda_min(T):
    """Smallest eigenvalue; re-solved in extended precision when tiny."""
    A = T.matrix if isinstance(T, TrigMomentMatrix) else np.asarray(T)
    lam = float(np.linalg.eigvalsh(A)[0])
    if lam < EIG_FALLBACK and A.shape[0] > 1:
        with mpmath.workdps(EXTENDED_DPS):
            if isinstance(T, TrigMomentMatrix) and T.matrix_mp is not None:
                B = T.matrix_mp
            else:
                B = mpmath.matrix(A.tolist())
            ev = mpmath.eighe(B, eigvals_only=True) if np.iscomplexobj(A) else mpmath.eigsy(B, eigvals_only=True)
            lam = float(min(mpmath.re(v) for v in ev))
    return lam


def certified_lambda_min(T):
    """``lambda_min`` minus the entry-error perturbation bound ``(m+1) * entry_error``."""
    return lambda_min(T) - T.order * T.entry_error


def low_rank_gap(A, k):
    """``min_{rank B <= k} ||A - B||_F`` for Hermitian ``A``."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("A must be square")
    if not np.allclose(A, A.conj().T, atol=1e-12):
        raise ValidationError("A must be Hermitian")
    n = A.shape[0]
    if int(k) != k or not 0 <= k < n:
        raise ValidationError(f"k must satisfy 0 <= k < {n}")
    sv = np.sort(np.abs(np.linalg.eigvalsh(A)))[::-1]
    return float(math.sqrt(math.fsum(sv[int(k):] ** 2)))


# ---------------------------------------------------------------------------
# Eigenvalue routes
# ---------------------------------------------------------------------------

def _wrapped(law, delta, theta):
    lo, hi = law.effective_support(1e-20)
    jmin = math.floor((delta * lo) / (2 * math.pi)) - 1
    jmax = math.ceil((delta * hi) / (2 * math.pi)) + 1
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape)
    for j in range(jmin, jmax + 1):
        out += law.pdf((theta + 2 * math.pi * j) / delta) / delta
    return out


def wrapped_density_min(law, delta):
    """``2 pi * min g_wrap`` where ``g`` is the density of ``delta X``."""
    if not law.has_density:
        raise UnsupportedLawError("wrapped-density route needs a law with a density")
    delta = _check_delta(delta)
    grid = np.linspace(0.0, 2 * math.pi, WRAP_GRID + 1)
    # one-sided limits at density breakpoints
    bps = np.mod(delta * np.asarray(law.breakpoints, dtype=float), 2 * math.pi)
    tiny = 1e-12
    extra = np.concatenate([bps - tiny, bps + tiny]) if bps.size else np.array([])
    pts = np.concatenate([grid, np.mod(extra, 2 * math.pi)])
    vals = _wrapped(law, delta, pts)
    best = float(vals.min())
    h = grid[1] - grid[0]
    order = np.argsort(vals[: grid.size])[:4]
    for i in order:
        a, b = max(0.0, grid[i] - h), min(2 * math.pi, grid[i] + h)
        res = optimize.minimize_scalar(lambda x: float(_wrapped(law, delta, np.array([x]))[0]),
                                       bounds=(a, b), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return 2 * math.pi * max(best, 0.0)


def _arc_params(law, delta):
    """``(b, gamma)`` when ``delta X`` has the arc law, else ``None``."""
    c = 1.0
    base = law
    while isinstance(base, Scaled):
        c *= base.factor
        base = base.base
    if isinstance(base, Arc) and abs(abs(c) * delta - 1.0) < 1e-12:
        return base.b, base.gamma
    return None


def ortho_expansion_bound(law, m, delta, *, use_kappa_bound=False):
    """``1 / ||R||_F^2`` with explicit OPUC coefficients.

    Rogers-Szego polynomials for Gaussian laws (``q = exp(-delta^2 sigma^2)``);
    explicit arc polynomials when ``delta X`` has the arc law. With
    ``use_kappa_bound`` the arc route uses ``sum 4^n kappa_n^2`` instead of
    the exact norm.
    """
    m = _check_m(m)
    delta = _check_delta(delta)
    if m == 0:
        return 1.0
    if isinstance(law, Gaussian):
        q = math.exp(-(delta * law.stddev) ** 2)
        if q < 1e-300:
            return 1.0 / (m + 1)
        return 1.0 / rogers_szego_coeff_matrix(q, m).frobenius_sq
    arc = _arc_params(law, delta)
    if arc is not None:
        _, gamma = arc
        if use_kappa_bound:
            return 1.0 / arc_opuc(gamma, m).frobenius_bound
        return 1.0 / arc_coeff_matrix(gamma, m).frobenius_sq
    raise UnsupportedLawError(
        "orthogonal-expansion route needs a Gaussian law or a law with delta X on the arc")


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    value: float
    log_value: float
    method: str
    delta: float
    lambda_min: float
    m: int
    notes: str = ""

    def to_dict(self):
        return {"value": self.value, "log_value": self.log_value, "method": self.method,
                "delta": self.delta, "lambda_min": self.lambda_min, "m": self.m, "notes": self.notes}


def _log_quotient(lam, m, delta):
    if not lam > 0:
        return -math.inf
    return math.log(lam) - math.log(2 * (m + 1)) - 0.5 * (m * delta) ** 2


def _from_log(log_value):
    return math.exp(log_value) if log_value > -745.0 else 0.0


def spectral_certificate(lam, m, delta, method):
    """Certificate from an eigenvalue lower bound at frequency ``delta``."""
    lv = _log_quotient(lam, m, delta)
    return Certificate(_from_log(lv), lv, method, float(delta), float(lam), int(m))


def analytic_deltas(law, m):
    """Frequencies used by the closed-form recipes for ``law``."""
    out = []
    m = max(int(m), 1)
    if isinstance(law, Uniform):
        out.append(math.pi / law.halfwidth)
        M = law.halfwidth
        if m >= math.e * M * M / 2:
            b = math.sqrt(M * M / m * math.log(2 * m / (math.e * M * M)))
            if b > 0:
                out.append(b / M)
    elif isinstance(law, Gaussian):
        s = law.stddev
        out += [math.sqrt(math.pi / (m * s)), math.sqrt(4 / (m * s))]
    elif isinstance(law, Laplace):
        out.append(m ** (-2 / 3) * (2 * math.pi / law.scale) ** (1 / 3))
    elif isinstance(law, SubWeibull):
        a, b = law.shape, law.scale
        out.append((1 / m) ** (2 / (2 + a)) * (2 * math.pi / b) ** (a / (2 + a)))
    elif isinstance(law, Scaled) and isinstance(law.base, Arc):
        out.append(1.0 / abs(law.factor))
    elif isinstance(law, Arc):
        out.append(1.0)
    return [d for d in out if d > 0 and math.isfinite(d)]


def default_delta_grid(law, m, n=64, lo=1e-3, hi=4.0):
    """``n`` log-spaced frequencies plus ``n`` more on ``[d/2, 2d]`` around each analytic choice ``d``."""
    grid = set(np.geomspace(lo, hi, n).tolist())
    for d in analytic_deltas(law, m):
        grid.add(d)
        grid.update(np.geomspace(d / 2, d * 2, n).tolist())
    return sorted(grid)


def _route_lambda(law, m, delta, route, precision):
    if route == "direct":
        T = trig_moment_matrix(law, m, delta, precision)
        return certified_lambda_min(T)
    if route == "wrapped":
        return wrapped_density_min(law, delta)
    return ortho_expansion_bound(law, m, delta)


def tv_certificate(law, m, delta_grid=None, route="direct", precision=Precision.DOUBLE):
    """Best spectral certificate over ``delta_grid`` (ties go to the smaller delta)."""
    if not isinstance(law, MixingLaw):
        raise ValidationError(f"expected a MixingLaw, got {type(law).__name__}")
    m = _check_m(m)
    route = str(route).lower()
    if route not in ROUTES:
        raise ValidationError(f"route must be one of {ROUTES}, got {route!r}")
    grid = default_delta_grid(law, m) if delta_grid is None else sorted(float(d) for d in delta_grid)
    if not grid:
        raise ValidationError("delta_grid must be non-empty")
    best = None
    for d in grid:
        d = _check_delta(d)
        lam = 1.0 if m == 0 else _route_lambda(law, m, d, route, precision)
        cert = spectral_certificate(lam, m, d, ROUTE_METHODS[route])
        if best is None or cert.log_value > best.log_value:
            best = cert
    return best


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

CLOSED_FORMS = ("uniform", "arc_bounded", "subweibull", "laplace", "gaussian", "gaussian_rs", "moment")


def _closed(name, log_value, delta, m, notes=""):
    return Certificate(_from_log(log_value), log_value, f"ClosedForm({name})", float(delta), math.nan, int(m), notes)


def moment_family_D(alpha):
    """``D_alpha``: smallest ``x >= e`` with ``(1/x)(1/(alpha log x))^(1/alpha) <= (1/3)((1 - 1/log x)/(1+alpha))^(1/alpha)``."""
    def gap(x):
        lhs = (1 / x) * (1 / (alpha * math.log(x))) ** (1 / alpha)
        rhs = ((1 - 1 / math.log(x)) / (1 + alpha)) ** (1 / alpha) / 3
        return lhs - rhs

    if gap(math.e) <= 0:
        return math.e
    hi = math.e * 2
    while gap(hi) > 0:
        hi *= 2
    return optimize.brentq(gap, math.e, hi, xtol=1e-14, rtol=1e-15)


def closed_form_lb(name, m, **p):
    """Printed closed-form TV lower bound, evaluated in log space.

    ``name`` is one of ``CLOSED_FORMS``; the returned certificate carries the
    frequency at which the underlying spectral bound is evaluated.
    """
    m = _check_m(m, 1)
    name = str(name).lower()
    if name == "uniform":
        M = float(p["M"])
        d = math.pi / M
        return _closed(name, -math.log(2 * (m + 1)) - math.pi ** 2 * m * m / (2 * M * M), d, m)
    if name == "arc_bounded":
        M = float(p["M"])
        if m < math.e * M * M / 2:
            raise OutOfRegimeError(f"needs m >= e M^2 / 2 = {math.e * M * M / 2:.6g} (m={m})")
        b = math.sqrt(M * M / m * math.log(2 * m / (math.e * M * M)))
        if not b > 0:
            raise OutOfRegimeError(f"needs m > e M^2 / 2 so that b > 0 (m={m})")
        lv = math.log1p(-(b / 4) ** 2) - math.log(8 * m) - m * m * b * b / (2 * M * M) - 2 * m * math.log(8 / b)
        return _closed(name, lv, b / M, m, notes=f"law: arc density with b={b!r}, scaled to [-M, M]")
    if name == "subweibull":
        a, beta = float(p["alpha"]), float(p["beta"])
        d = (1 / m) ** (2 / (2 + a)) * (2 * math.pi / beta) ** (a / (2 + a))
        logf = math.log(subweibull_normalizer(a) / beta) - (2 * math.pi / (d * beta)) ** a
        lv = math.log(math.pi) + logf - math.log(2 * m * d) - 0.5 * (m * d) ** 2
        return _closed(name, lv, d, m)
    if name == "laplace":
        lam = float(p["scale"])
        d = m ** (-2 / 3) * (2 * math.pi / lam) ** (1 / 3)
        lv = math.log(math.pi / 4) - math.log(2 * math.pi * m * lam * lam) / 3 - (2 * math.pi * m / lam) ** (2 / 3)
        return _closed(name, lv, d, m)
    if name == "gaussian":
        s = float(p["sigma"])
        d = math.sqrt(math.pi / (m * s))
        lv = -math.log(2 * math.sqrt(2 * m * s)) - math.pi * m / s
        return _closed(name, lv, d, m)
    if name == "gaussian_rs":
        s = float(p["sigma"])
        if m < 2 * s:
            raise OutOfRegimeError(f"needs m >= 2 sigma = {2 * s:.6g} (m={m})")
        d = math.sqrt(4 / (m * s))
        q = math.exp(-4 * s / m)
        lv = math.log(q_pochhammer(q)) - 4 * m / s - math.log(2) - 3 * math.log(m + 1)
        return _closed(name, lv, d, m)
    if name == "moment":
        a, beta = float(p["alpha"]), float(p["beta"])
        D = moment_family_D(a)
        if m / beta < D:
            raise OutOfRegimeError(f"needs m / beta >= D_alpha = {D:.6g} (m/beta={m / beta:.6g})")
        law = TruncPareto.moment_constrained(a, beta, m)
        d = math.pi * D * (a * math.log(D)) ** (1 / a) / m
        x = 3 * math.pi / d
        h = float(law.pdf(np.array([x]))[0])
        if not h > 0:
            raise OutOfRegimeError("3 pi / delta falls outside the truncated Pareto support")
        lv = math.log(math.pi * h) - math.log(2 * m * d) - 0.5 * (m * d) ** 2
        return _closed(name, lv, d, m, notes=f"law: truncated Pareto {law.to_dict()}")
    raise ValidationError(f"unknown closed form {name!r}; expected one of {CLOSED_FORMS}")


def closed_form_for_law(law, m):
    """Closed-form certificate matching ``law`` or ``None``."""
    try:
        if isinstance(law, Uniform):
            return closed_form_lb("uniform", m, M=law.halfwidth)
        if isinstance(law, Gaussian):
            return closed_form_lb("gaussian", m, sigma=law.stddev)
        if isinstance(law, Laplace):
            return closed_form_lb("laplace", m, scale=law.scale)
        if isinstance(law, SubWeibull):
            return closed_form_lb("subweibull", m, alpha=law.shape, beta=law.scale)
    except OutOfRegimeError:
        return None
    return None


# ---------------------------------------------------------------------------
# Inapproximability and chi-square routes
# ---------------------------------------------------------------------------

def inapprox_bound(family, m, *, alpha=None, beta=None, M=None):
    """Lower bound that stays bounded away from zero when ``m`` is small compared with the scale."""
    m = _check_m(m, 1)
    fam = str(family).lower()
    if fam == "subweibull":
        Ct = math.sqrt(2 * math.pi) * subweibull_normalizer(float(alpha))
        if not beta >= 2 * Ct * m:
            raise OutOfRegimeError(f"needs beta >= 2 C~_alpha m = {2 * Ct * m:.6g} (beta={beta!r})")
        r = Ct * m / beta
    elif fam == "uniform":
        C = math.sqrt(math.pi / 2)
        if not M >= math.sqrt(2 * math.pi) * m:
            raise OutOfRegimeError(f"needs M >= sqrt(2 pi) m = {math.sqrt(2 * math.pi) * m:.6g} (M={M!r})")
        r = C * m / M
    else:
        raise ValidationError(f"unknown family {family!r}")
    return min(1.0, max(0.0, 1.0 - 5 * r * math.sqrt(math.log(1 / r))))


@dataclass(frozen=True)
class WeightedHankelBound:
    m: int
    M: float
    lambda_min: float
    coeff_bound: float
    chi2_lb: float


def weighted_hankel_matrix(M, m):
    """Exact rational ``V[i, j] = C_i C_j E[U^(i+j)]`` squared-free form.

    Returns ``(H, c2)`` with ``H`` the Hankel moments of ``Unif[-1, 1]`` and
    ``c2[i] = C_i^2 = M^(2i) / (2^i i!)`` as Fractions.
    """
    Mf = Fraction(M)
    H = [[Fraction(1, i + j + 1) if (i + j) % 2 == 0 else Fraction(0) for j in range(m + 1)] for i in range(m + 1)]
    c2 = [Mf ** (2 * i) / (2 ** i * math.factorial(i)) for i in range(m + 1)]
    return H, c2


def weighted_hankel_lb(M, m, precision=Precision.EXTENDED):
    """``lambda_min(V)`` directly and via ``1 / ||L C^-1||_F^2``, plus the chi-square lower bound.

    ``chi2_lb = lambda_min^2 / ((m+1) 2m (4e)^m)``; ``nan`` for ``m = 0``.
    """
    m = _check_m(m)
    M = float(M)
    if not M > 0:
        raise ValidationError("M must be positive")
    if m > 20:
        raise ValidationError("m must be <= 20")
    if m >= 1 and m < M * M:
        raise OutOfRegimeError(f"needs m >= M^2 = {M * M!r} (m={m})")
    H, c2 = weighted_hankel_matrix(M, m)
    dps = EXTENDED_DPS if as_precision(precision) is Precision.EXTENDED else 17
    with mpmath.workdps(max(dps, 20) + 2 * m):
        C = [mpmath.sqrt(mpmath.mpf(c.numerator) / c.denominator) for c in c2]
        V = mpmath.matrix(m + 1, m + 1)
        for i in range(m + 1):
            for j in range(m + 1):
                h = H[i][j]
                V[i, j] = C[i] * C[j] * mpmath.mpf(h.numerator) / h.denominator
        lam = min(mpmath.eigsy(V, eigvals_only=True))
        # orthonormal Legendre coefficients L[n, j] on Unif[-1, 1]
        fro = mpmath.mpf(0)
        for n in range(m + 1):
            coeffs = _legendre_coeffs_exact(n)
            for j, c in enumerate(coeffs):
                if c:
                    fro += (2 * n + 1) * (mpmath.mpf(c.numerator) / c.denominator) ** 2 / C[j] ** 2
        coeff_bound = 1 / fro
        lam_f, cb_f = float(lam), float(coeff_bound)
        chi2 = math.nan if m == 0 else float(lam ** 2 / ((m + 1) * 2 * m * (4 * mpmath.e) ** m))
    return WeightedHankelBound(m, M, lam_f, cb_f, chi2)


@dataclass(frozen=True)
class Chi2ToTvConstants:
    c0: float
    c1: float
    c2: float
    c3: float
    zeta: float
    eta: object
    log_eta: float


def chi2_to_tv_constants():
    """``(zeta, eta)`` with ``TV >= eta * chi2^zeta``; ``eta`` underflows double, so it is an mpf."""
    c0 = 50
    c1 = 4 + 32 * math.sqrt(2 * math.pi) * c0
    c2 = 2 * c0 ** 2 + c0 + 1
    c3 = 0.125
    zeta = (c2 + c3) / c3
    with mpmath.workdps(EXTENDED_DPS):
        eta = mpmath.power(2 * mpmath.mpf(c1), -zeta)
    log_eta = -zeta * math.log(2 * c1)
    return Chi2ToTvConstants(c0, c1, c2, c3, zeta, eta, log_eta)


def tv_from_chi2_lb(chi2_lb):
    """Log of the TV lower bound ``eta * chi2^zeta``."""
    k = chi2_to_tv_constants()
    if not chi2_lb > 0:
        return -math.inf
    return k.log_eta + k.zeta * math.log(chi2_lb)

