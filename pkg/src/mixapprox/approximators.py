"""Constructions of m-atomic approximants and their printed upper-bound envelopes."""

import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import OutOfRegimeError, PrecisionError, ValidationError
from .laws import (
    Atomic,
    Conditioned,
    Gaussian,
    MixingLaw,
    TruncPareto,
    Uniform,
    condition,
    orlicz_parameters,
    tail_probability_bound,
)
from .mixtures import _discretize, chi2_moment_bound
from .precision import EXTENDED_DPS, Precision, as_precision

KAPPA = 16 * math.e ** 3
DEFAULT_C_ALPHA = 0.5
DEFAULT_BIG_C_ALPHA = 8.0
MIN_CELL_MASS = 1e-14
STRATEGIES = ("global", "local", "truncated")


class RegimeWarning(UserWarning):
    """A construction was requested where the upper-bound theory does not apply."""


def _check_m(m):
    if int(m) != m or m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    return int(m)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule matching moments ``0..matched_order`` of ``source``."""

    nodes: np.ndarray
    weights: np.ndarray
    matched_order: int
    source: MixingLaw = field(repr=False, compare=False, default=None)
    nodes_mp: tuple = field(repr=False, compare=False, default=None)
    weights_mp: tuple = field(repr=False, compare=False, default=None)

    @property
    def m(self):
        return len(self.nodes)

    def to_law(self):
        if self.nodes_mp is not None:
            # round the high-precision weights after normalising in mp
            with mpmath.workdps(EXTENDED_DPS):
                tot = mpmath.fsum(self.weights_mp)
                w = [float(v / tot) for v in self.weights_mp]
            return Atomic.from_arrays(self.nodes, w, drop_zero=False)
        return Atomic.from_arrays(self.nodes, self.weights, drop_zero=False)

    def moment(self, k, precision=Precision.DOUBLE):
        if as_precision(precision) is Precision.EXTENDED and self.nodes_mp is not None:
            with mpmath.workdps(EXTENDED_DPS):
                return mpmath.fsum(w * x ** k for x, w in zip(self.nodes_mp, self.weights_mp))
        return math.fsum(self.weights * self.nodes ** k)


# ---------------------------------------------------------------------------
# Gauss quadrature
# ---------------------------------------------------------------------------

def _stieltjes(x, w, m):
    """Recurrence coefficients of the discrete measure ``sum w_i delta_{x_i}``.

    Orthonormal Stieltjes (Lanczos) with full reorthogonalisation.
    """
    total = w.sum()
    q = np.full(x.shape, 1.0 / math.sqrt(total))
    basis = [q]
    a = np.zeros(m)
    b = np.zeros(max(m - 1, 0))
    for k in range(m):
        a[k] = np.sum(w * x * q * q)
        if k == m - 1:
            break
        r = (x - a[k]) * q
        if k > 0:
            r -= math.sqrt(b[k - 1]) * basis[-2]
        for p in basis:
            r -= np.sum(w * r * p) * p
        bk = float(np.sum(w * r * r))
        if not bk > 1e-28 * max(1.0, a[k] ** 2):
            raise PrecisionError(
                f"recurrence coefficient b_{k + 1}={bk!r} lost positivity; retry with precision='extended'")
        b[k] = bk
        q = r / math.sqrt(bk)
        basis.append(q)
    return a, b, total


def _golub_welsch(a, b, mu0):
    if len(a) == 1:
        return np.array([a[0]]), np.array([mu0])
    nodes, vecs = eigh_tridiagonal(a, np.sqrt(b))
    weights = mu0 * vecs[0, :] ** 2
    return nodes, weights


def _discrete_measure(law, m):
    if isinstance(law, Atomic):
        return law.atoms_array, law.weights_array
    # tighter tail cut than the density evaluator: moments up to 2m-1 weight the tails
    nodes, mass = _discretize(law, 0.5, 24, 1e-40)
    return nodes, mass


def _affine_legendre(lo, hi, m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi + lo) + 0.5 * (hi - lo) * x, w / 2


def _gauss_double(law, m):
    if isinstance(law, Uniform):
        return _affine_legendre(-law.halfwidth, law.halfwidth, m)
    if isinstance(law, Conditioned) and isinstance(law.base, Uniform):
        return _affine_legendre(*law.support, m)
    if isinstance(law, Gaussian):
        x, w = np.polynomial.hermite_e.hermegauss(m)
        return law.stddev * x, w / w.sum()
    x, w = _discrete_measure(law, m)
    a, b, mu0 = _stieltjes(x, w, m)
    return _golub_welsch(a, b, mu0)


def _chebyshev_algorithm(mom, m):
    """Recurrence coefficients from raw moments ``mom[0..2m-1]`` (mpmath)."""
    sig_prev = [mpmath.mpf(0)] * (2 * m)
    sig = list(mom[: 2 * m])
    a = [sig[1] / sig[0]]
    b = [sig[0]]
    for k in range(1, m):
        new = [mpmath.mpf(0)] * (2 * m)
        for l in range(k, 2 * m - k):
            new[l] = sig[l + 1] - a[k - 1] * sig[l] - b[k - 1] * sig_prev[l]
        if not new[k] > 0:
            raise PrecisionError(f"moment sequence lost positivity at order {k} even in extended precision")
        a.append(new[k + 1] / new[k] - sig[k] / sig[k - 1])
        b.append(new[k] / sig[k - 1])
        sig_prev, sig = sig, new
    return a, b


def _gauss_extended(law, m):
    dps = max(2 * EXTENDED_DPS, EXTENDED_DPS + 3 * m)
    with mpmath.workdps(dps):
        if isinstance(law, (Uniform, Gaussian)) or (isinstance(law, Conditioned) and isinstance(law.base, Uniform)):
            if isinstance(law, Gaussian):
                s2 = mpmath.mpf(law.stddev) ** 2
                a = [mpmath.mpf(0)] * m
                b = [mpmath.mpf(1)] + [k * s2 for k in range(1, m)]
                shift, scale = mpmath.mpf(0), mpmath.mpf(1)
            else:
                lo, hi = law.support
                lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
                shift, scale = (hi + lo) / 2, (hi - lo) / 2
                a = [mpmath.mpf(0)] * m
                b = [mpmath.mpf(1)] + [mpmath.mpf(k * k) / (4 * k * k - 1) for k in range(1, m)]
        else:
            mom = [law._moment_mp(k) for k in range(2 * m)]
            a, b = _chebyshev_algorithm(mom, m)
            shift, scale = mpmath.mpf(0), mpmath.mpf(1)
        J = mpmath.matrix(m, m)
        for i in range(m):
            J[i, i] = a[i]
            if i + 1 < m:
                J[i, i + 1] = J[i + 1, i] = mpmath.sqrt(b[i + 1])
        E, Q = mpmath.eigsy(J)
        pairs = sorted((E[j], b[0] * Q[0, j] ** 2) for j in range(m))
        nodes = tuple(shift + scale * e for e, _ in pairs)
        weights = tuple(w / b[0] for _, w in pairs)
        with mpmath.workdps(EXTENDED_DPS):
            nodes = tuple(+v for v in nodes)
            weights = tuple(+v for v in weights)
    return nodes, weights


def gauss_quadrature(law, m, precision=Precision.DOUBLE):
    """``m``-point Gauss rule of ``law``: exact for polynomials of degree ``<= 2m-1``.

    Atomic laws with at most ``m`` atoms are returned unchanged.
    """
    m = _check_m(m)
    if not isinstance(law, MixingLaw):
        raise ValidationError(f"expected a MixingLaw, got {type(law).__name__}")
    prec = as_precision(precision)
    if isinstance(law, Atomic) and law.size <= m:
        nodes, weights = law.atoms_array, law.weights_array
        nmp = wmp = None
        if prec is Precision.EXTENDED:
            nmp = tuple(mpmath.mpf(v) for v in law.atoms)
            wmp = tuple(mpmath.mpf(v) for v in law.weights)
        return QuadratureRule(nodes, weights, 2 * m - 1, law, nmp, wmp)
    if prec is Precision.EXTENDED:
        nmp, wmp = _gauss_extended(law, m)
        nodes = np.array([float(v) for v in nmp])
        weights = np.array([float(v) for v in wmp])
        rule = QuadratureRule(nodes, weights, 2 * m - 1, law, nmp, wmp)
    else:
        nodes, weights = _gauss_double(law, m)
        order = np.argsort(nodes)
        rule = QuadratureRule(nodes[order], weights[order] / weights.sum(), 2 * m - 1, law)
    if not np.all(rule.weights > 0) or np.any(np.diff(rule.nodes) <= 0):
        raise PrecisionError("Gauss rule has non-positive weights or coincident nodes; retry with precision='extended'")
    return rule


# ---------------------------------------------------------------------------
# Local moment matching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    lower: float
    upper: float
    mass: float
    budget: int
    chi2_bound: float

    @property
    def halfwidth(self):
        return 0.5 * (self.upper - self.lower)


@dataclass(frozen=True)
class ApproxPlan:
    """How an approximant was built and the chi-square bound it certifies."""

    strategy: str
    m: int
    M: float
    K: int
    cells: tuple
    chi2_bound: float
    kappa: float = KAPPA

    @property
    def budgets(self):
        return tuple(c.budget for c in self.cells)


def _cell_bound(halfwidth, budget, exact):
    if exact or halfwidth == 0:
        return 0.0
    J = 2 * budget
    if J > 4 * halfwidth * halfwidth:
        return chi2_moment_bound(halfwidth, J)
    return math.inf


def _support_radius(law):
    lo, hi = law.support
    return max(abs(lo), abs(hi))


def local_moment_match_plan(law, M, m, *, kappa=KAPPA, precision=Precision.DOUBLE):
    """Build the local moment-matching approximant; returns ``(Atomic, ApproxPlan)``.

    Global Gauss rule when ``m >= kappa M^2``; otherwise ``K`` equal cells,
    each matched with ``floor(m/K)`` atoms. ``K`` is capped at ``m`` so every
    non-empty cell gets at least one atom.
    """
    m = _check_m(m)
    M = float(M)
    if not (M > 0 and math.isfinite(M)):
        raise ValidationError("M must be positive and finite")
    if _support_radius(law) > M * (1 + 1e-12):
        raise ValidationError(f"law support {law.support} is not contained in [-{M}, {M}]")
    if m >= kappa * M * M:
        rule = gauss_quadrature(law, m, precision)
        approx = rule.to_law()
        exact = isinstance(law, Atomic) and law.size <= m
        bound = _cell_bound(M, m, exact)
        cell = Cell(-M, M, 1.0, m, bound)
        return approx, ApproxPlan("global", m, M, 1, (cell,), bound, kappa)
    K = min(int(math.floor(3 * kappa * M * M / m)), m)
    budget = m // K
    edges = np.linspace(-M, M, K + 1)
    atoms, weights, cells = [], [], []
    for j in range(K):
        lo, hi = float(edges[j]), float(edges[j + 1])
        if isinstance(law, Atomic):
            a = law.atoms_array
            # half-open cells so an atom on an edge is counted once
            sel = (a >= lo) & ((a < hi) if j < K - 1 else (a <= hi))
            mass = float(law.weights_array[sel].sum())
        else:
            mass = law.mass(lo, hi) if not isinstance(law, Conditioned) else law.interval_mass(lo, hi)
        if mass < MIN_CELL_MASS:
            continue
        if isinstance(law, Atomic):
            cell_law = Atomic.from_arrays(law.atoms_array[sel], law.weights_array[sel])
        else:
            cell_law = condition(law, lo, hi)
        rule = gauss_quadrature(cell_law, budget, precision)
        exact = isinstance(cell_law, Atomic) and cell_law.size <= budget
        atoms.append(rule.nodes)
        weights.append(mass * rule.weights)
        cells.append(Cell(lo, hi, mass, budget, _cell_bound(0.5 * (hi - lo), budget, exact)))
    approx = Atomic.from_arrays(np.concatenate(atoms), np.concatenate(weights), drop_zero=False)
    total = math.fsum(c.mass for c in cells)
    bound = math.fsum(c.mass / total * c.chi2_bound for c in cells) if all(
        math.isfinite(c.chi2_bound) for c in cells) else math.inf
    return approx, ApproxPlan("local", m, M, K, tuple(cells), bound, kappa)


def local_moment_match(law, M, m, *, kappa=KAPPA, precision=Precision.DOUBLE):
    return local_moment_match_plan(law, M, m, kappa=kappa, precision=precision)[0]


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationPlan:
    approximant: Atomic
    t: float
    mass_inside: float
    tail_bound: float
    inner: ApproxPlan
    chi2_bound: float


def truncation_radius(law, m, *, c_alpha=DEFAULT_C_ALPHA, kappa=KAPPA):
    """Truncation radius ``t`` used by ``truncate_and_match``."""
    alpha, beta = orlicz_parameters(law)
    if isinstance(law, TruncPareto):
        if not m > beta:
            raise OutOfRegimeError(f"moment-family truncation needs m > beta (m={m}, beta={beta!r})")
        return m * math.sqrt(math.log(kappa) / (4 * kappa) / (2 * alpha * math.log(m / beta)))
    inner = m * math.log1p(m ** ((alpha - 2) / (alpha + 2)) / beta ** (2 * alpha / (alpha + 2)))
    return c_alpha * beta * inner ** (1.0 / alpha)


def truncate_and_match_plan(law, m, *, c_alpha=DEFAULT_C_ALPHA, C_alpha=DEFAULT_BIG_C_ALPHA,
                            kappa=KAPPA, precision=Precision.DOUBLE):
    m = _check_m(m)
    if isinstance(law, Atomic):
        t = max(abs(law.atoms[0]), abs(law.atoms[-1]))
        if law.size <= m:
            inner = ApproxPlan("global", m, t, 1, (Cell(-t, t, 1.0, m, 0.0),), 0.0, kappa)
            return TruncationPlan(law, t, 1.0, 0.0, inner, 0.0)
        approx, inner = local_moment_match_plan(law, max(t, 1e-300), m, kappa=kappa, precision=precision)
        return TruncationPlan(approx, t, 1.0, 0.0, inner, inner.chi2_bound)
    alpha, beta = orlicz_parameters(law)
    if m < C_alpha * beta:
        msg = f"m={m} < C_alpha*beta={C_alpha * beta:.6g}: outside the sub-Weibull upper-bound regime"
        try:
            from .certificates import inapprox_bound

            msg += f"; inapproximability bound = {inapprox_bound('subweibull', m, alpha=law.shape, beta=law.scale):.6g}"
        except (ValidationError, AttributeError):
            msg += "; inapproximability bound not applicable"
        warnings.warn(msg, RegimeWarning, stacklevel=2)
    t = truncation_radius(law, m, c_alpha=c_alpha, kappa=kappa)
    lo, hi = law.support
    a, b = max(lo, -t), min(hi, t)
    inside = law.mass(a, b)
    cond = condition(law, a, b)
    approx, inner = local_moment_match_plan(cond, t, m, kappa=kappa, precision=precision)
    tail = tail_probability_bound(law, t)
    outside = max(0.0, 1.0 - inside)
    bound = 2.0 / inside * (inner.chi2_bound + outside) if inside > 0 else math.inf
    return TruncationPlan(approx, t, inside, tail, inner, bound)


def truncate_and_match(law, m, **kwargs):
    """Condition ``law`` on ``[-t, t]`` and match locally; returns ``(Atomic, t)``."""
    plan = truncate_and_match_plan(law, m, **kwargs)
    return plan.approximant, plan.t


def construct(law, m, strategy="global", precision=Precision.DOUBLE, **kwargs):
    """Default approximant used by the sandwich pipeline."""
    s = str(strategy).lower()
    if s not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if s == "global":
        return gauss_quadrature(law, m, precision).to_law()
    if s == "local":
        M = kwargs.pop("M", None) or _support_radius(law)
        if not math.isfinite(M):
            raise ValidationError("local strategy needs a compactly supported law")
        return local_moment_match(law, M, m, precision=precision, **kwargs)
    return truncate_and_match(law, m, precision=precision, **kwargs)[0]


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    family: str
    regime: str
    log_value: float

    @property
    def value(self):
        return math.exp(self.log_value) if self.log_value > -745 else 0.0


def envelope(family, m, *, M=None, alpha=None, beta=None, c_alpha=DEFAULT_C_ALPHA,
             C_alpha=DEFAULT_BIG_C_ALPHA, kappa=KAPPA):
    """Printed chi-square upper-bound envelope with its regime, in log space."""
    m = _check_m(m)
    fam = str(family).lower()
    if fam == "bounded":
        if M is None or not M > 0:
            raise ValidationError("bounded envelope needs M > 0")
        if m >= kappa * M * M:
            return Envelope(fam, "m >= kappa M^2", -m * math.log(m / (M * M)))
        if m >= 3 * math.sqrt(kappa) * M:
            return Envelope(fam, "3 sqrt(kappa) M <= m < kappa M^2", -(math.log(kappa) / (4 * kappa)) * m * m / (M * M))
        raise OutOfRegimeError(f"bounded envelope needs m >= 3 sqrt(kappa) M = {3 * math.sqrt(kappa) * M:.6g} (m={m})")
    if fam == "subweibull":
        if alpha is None or beta is None:
            raise ValidationError("sub-Weibull envelope needs alpha and beta")
        if m < C_alpha * beta:
            raise OutOfRegimeError(f"sub-Weibull envelope needs m >= C_alpha beta = {C_alpha * beta:.6g} (m={m})")
        inner = math.log1p(m ** ((alpha - 2) / (alpha + 2)) / beta ** (2 * alpha / (alpha + 2)))
        return Envelope(fam, "m >= C_alpha beta", -c_alpha * m * inner)
    if fam == "moment":
        if alpha is None or beta is None:
            raise ValidationError("moment envelope needs alpha and beta")
        need_m = kappa ** (9 / (8 * alpha)) * beta
        if m < need_m:
            raise OutOfRegimeError(f"moment envelope needs m >= kappa^(9/(8 alpha)) beta = {need_m:.6g} (m={m})")
        need_b = 8 * alpha / (math.e * math.log(kappa))
        if beta < need_b:
            raise OutOfRegimeError(f"moment envelope needs beta >= 8 alpha / (e log kappa) = {need_b:.6g}")
        r = m / beta
        return Envelope(fam, "moment family", alpha * (math.log(1 / r) + 0.5 * math.log(math.log(r))))
    raise ValidationError(f"unknown envelope family {family!r}")


def upper_bound_envelope(family, m, **params):
    return envelope(family, m, **params).value


def family_for_law(law):
    """Envelope parameters matching ``law`` (used by the sandwich report)."""
    if isinstance(law, (Uniform,)) or (isinstance(law, Conditioned) and math.isfinite(_support_radius(law))):
        return {"family": "bounded", "M": _support_radius(law)}
    if isinstance(law, TruncPareto):
        a, b = orlicz_parameters(law)
        return {"family": "moment", "alpha": a, "beta": b}
    try:
        a, b = orlicz_parameters(law)
    except ValidationError:
        r = _support_radius(law)
        return {"family": "bounded", "M": r} if math.isfinite(r) else None
    return {"family": "subweibull", "alpha": a, "beta": b}
