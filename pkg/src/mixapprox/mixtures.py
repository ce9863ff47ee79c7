"""Gaussian location mixtures ``f_P = P * N(0, s^2)`` and f-divergences between them."""

import math
from dataclasses import dataclass
import warnings
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import NumericalError, OutOfRegimeError, ValidationError
from .laws import TAIL_EPS, Atomic, Conditioned, Gaussian, Laplace, MixingLaw, Uniform
from .quadrature import IntegrationWarning, integrate, panel_rule, refine_edges

_LOG_SQRT2PI = 0.5 * math.log(2.0 * math.pi)
WINDOW_PAD = 12.0
DIVERGENCE_KINDS = ("tv", "h2", "kl", "chi2")
_EPS = float(np.finfo(float).eps)


def _phi(z):
    return np.exp(-0.5 * z * z - _LOG_SQRT2PI)


def _ndtr_diff(a, b):
    """``Phi(b) - Phi(a)`` for ``a <= b`` without cancellation in the upper tail."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    upper = a > 0
    return np.where(upper, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))


@lru_cache(maxsize=128)
def _discretize(law, panel_width=0.5, grading=24, tail=TAIL_EPS):
    """Quadrature nodes and (density-weighted) masses for a density law."""
    lo, hi = law.effective_support(tail)
    bps = sorted({lo, hi, *[p for p in law.breakpoints if lo < p < hi]})
    edges = refine_edges(np.array(bps), panel_width)
    # geometric grading towards every breakpoint resolves cusps and sqrt edges
    extra = []
    for p in bps:
        for j in range(1, grading + 1):
            step = panel_width * 2.0 ** -j
            extra.extend((p - step, p + step))
    edges = np.unique(np.concatenate([edges, [e for e in extra if lo < e < hi]]))
    nodes, weights = panel_rule(edges, 20)
    mass = weights * law.pdf(nodes)
    keep = mass > 0
    nodes, mass = nodes[keep], mass[keep]
    total = math.fsum(mass)
    if not abs(total - 1.0) < 1e-8:
        raise NumericalError(f"density of {law!r} integrates to {total!r} on its effective support")
    return nodes, mass / total


class MixtureDensity:
    """Evaluator for ``f_P(x) = int phi_s(x - theta) dP(theta)``.

    ``noise_scale`` is the standard deviation ``s`` of the Gaussian kernel
    (1 by default). Closed forms are used for atomic, Gaussian, uniform,
    Laplace and conditioned uniform/Gaussian laws; anything else is
    integrated against a composite Gauss-Legendre discretisation.
    """

    def __init__(self, mixing, noise_scale=1.0):
        if not isinstance(mixing, MixingLaw):
            raise ValidationError(f"expected a MixingLaw, got {type(mixing).__name__}")
        s = float(noise_scale)
        if not (s > 0 and math.isfinite(s)):
            raise ValidationError("noise_scale must be a positive finite number")
        self.mixing = mixing
        self.noise_scale = s
        self._eval = self._pick_evaluator()

    @property
    def effective_support(self):
        return self.mixing.effective_support()

    @property
    def window(self):
        lo, hi = self.effective_support
        pad = WINDOW_PAD * self.noise_scale
        return lo - pad, hi + pad

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        out = self._eval(np.atleast_1d(x))
        return float(out[0]) if scalar else out

    def _pick_evaluator(self):
        law, s = self.mixing, self.noise_scale
        if isinstance(law, Atomic):
            a, w = law.atoms_array, law.weights_array

            def atomic(x):
                out = np.empty(x.shape)
                # chunk to bound memory for large grids
                for i in range(0, x.size, 4096):
                    z = (x[i:i + 4096, None] - a[None, :]) / s
                    out[i:i + 4096] = _phi(z) @ w / s
                return out

            return atomic
        if isinstance(law, Gaussian):
            tot = math.hypot(law.stddev, s)
            return lambda x: _phi(x / tot) / tot
        if isinstance(law, Uniform):
            M = law.halfwidth
            return lambda x: _ndtr_diff((x - M) / s, (x + M) / s) / (2 * M)
        if isinstance(law, Laplace):
            lam = law.scale

            def laplace(x):
                c = s * s / (2 * lam * lam) - math.log(2 * lam)
                t1 = c - x / lam + special.log_ndtr(x / s - s / lam)
                t2 = c + x / lam + special.log_ndtr(-x / s - s / lam)
                return np.exp(np.logaddexp(t1, t2))

            return laplace
        if isinstance(law, Conditioned) and isinstance(law.base, Uniform):
            lo, hi = law.support
            return lambda x: _ndtr_diff((x - hi) / s, (x - lo) / s) / (hi - lo)
        if isinstance(law, Conditioned) and isinstance(law.base, Gaussian):
            sig = law.base.stddev
            var = sig * sig + s * s
            sd = sig * s / math.sqrt(var)
            lo, hi = law.support

            def cond_gauss(x):
                mu = x * sig * sig / var
                return _phi(x / math.sqrt(var)) / math.sqrt(var) * _ndtr_diff((lo - mu) / sd, (hi - mu) / sd) / law.mass

            return cond_gauss
        nodes, mass = _discretize(law)

        def generic(x):
            out = np.empty(x.shape)
            for i in range(0, x.size, 512):
                z = (x[i:i + 512, None] - nodes[None, :]) / s
                out[i:i + 512] = _phi(z) @ mass / s
            return out

        return generic


def mixture_density(mix, x, noise_scale=1.0):
    """``f_P(x)``; accepts scalars or arrays."""
    return MixtureDensity(mix, noise_scale)(x)


@dataclass(frozen=True)
class DivergenceValue:
    kind: str
    value: float
    est_abs_error: float

    def to_dict(self):
        return {"kind": self.kind, "value": self.value, "abs_err": self.est_abs_error}


def _kind(kind):
    k = str(kind).lower().replace("²", "2").replace("_", "")
    k = {"hellinger2": "h2", "hellinger": "h2", "chisq": "chi2", "chi": "chi2", "totalvariation": "tv"}.get(k, k)
    if k not in DIVERGENCE_KINDS:
        raise ValidationError(f"unknown divergence kind {kind!r}; expected one of {DIVERGENCE_KINDS}")
    return k


def _xlog1p_minus(u):
    """``(1+u) log(1+u) - u``, accurate for small ``u``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-3
    us = np.where(small, u, 0.0)
    series = us * us * (0.5 - us / 6.0 + us * us / 12.0 - us ** 3 / 20.0)
    ul = np.where(small, 0.0, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(ul > -1.0, (1.0 + ul) * np.log1p(ul) - ul, 1.0)
    return np.where(small, series, big)


def _noise_aware(f, lo, hi, pts):
    """Integrate a quadratic-in-(f_P - f_Q) integrand to its rounding floor.

    Rounding in ``f_P - f_Q`` perturbs the integral by about ``eps * sqrt(value)``,
    so a pilot pass sets the absolute tolerance just above that level.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        pilot, _ = integrate(f, lo, hi, points=pts, atol=0.0, rtol=1e-3, max_intervals=400)
    atol = max(1e-26, 16 * _EPS * math.sqrt(max(float(pilot), 0.0)))
    return integrate(f, lo, hi, points=pts, atol=atol, rtol=1e-11)


def divergence(kind, P, Q, *, noise_scale=1.0):
    """``d(f_P || f_Q)`` for ``d`` in ``{tv, h2, kl, chi2}``.

    Hellinger is ``int (sqrt f - sqrt g)^2`` (no 1/2 factor). ``est_abs_error``
    combines the quadrature error estimate with a floating-point floor from
    forming ``f_P - f_Q``.
    """
    k = _kind(kind)
    if P == Q:
        return DivergenceValue(k, 0.0, 0.0)
    fP = MixtureDensity(P, noise_scale)
    fQ = MixtureDensity(Q, noise_scale)
    lo = min(fP.window[0], fQ.window[0])
    hi = max(fP.window[1], fQ.window[1])
    pts = sorted({*P.breakpoints, *Q.breakpoints} | set(np.arange(math.ceil(lo), hi, 1.0).tolist()))

    def pieces(x):
        p, q = fP(x), fQ(x)
        return p, q, p - q

    if k == "tv":
        val, err = integrate(lambda x: 0.5 * np.abs(pieces(x)[2]), lo, hi, points=pts, atol=1e-14, rtol=1e-12)
        floor = 2 * _EPS
    elif k == "h2":
        def h2(x):
            p, q, d = pieces(x)
            den = np.sqrt(p) + np.sqrt(q)
            return np.where(den > 0, (d / np.where(den > 0, den, 1.0)) ** 2, 0.0)

        val, err = integrate(h2, lo, hi, points=pts, atol=1e-14, rtol=1e-12)
        floor = 4 * _EPS * max(math.sqrt(val), _EPS)
    elif k == "chi2":
        def chi2(x):
            _, q, d = pieces(x)
            return d * d / np.maximum(q, 1e-300)

        val, err = _noise_aware(chi2, lo, hi, pts)
        floor = 8 * _EPS * math.sqrt(max(val, 0.0))
    else:
        def kl(x):
            p, q, d = pieces(x)
            qq = np.maximum(q, 1e-300)
            return np.where(p > 0, qq * _xlog1p_minus(d / qq), q)

        val, err = _noise_aware(kl, lo, hi, pts)
        floor = 8 * _EPS * math.sqrt(max(val, 0.0))
    val = float(val)
    if not math.isfinite(val):
        raise NumericalError(f"{k} integral is not finite")
    val = max(val, 0.0)
    if k == "tv":
        val = min(val, 1.0)
    return DivergenceValue(k, val, float(err) + floor)


def chi2_moment_bound(M, J):
    """``4 exp(M^2/2) (4 e M^2 / J)^J``: chi-square bound when moments ``1..J-1`` agree."""
    M = float(M)
    if not (M > 0 and math.isfinite(M)):
        raise ValidationError("M must be positive and finite")
    if int(J) != J:
        raise ValidationError("J must be an integer")
    J = int(J)
    if not J > 4 * M * M:
        raise OutOfRegimeError(f"moment bound needs J > 4 M^2 (J={J}, 4M^2={4 * M * M!r})")
    return math.exp(math.log(4.0) + 0.5 * M * M + J * math.log(4 * math.e * M * M / J))


def log_chi2_moment_bound(M, J):
    chi2_moment_bound(M, J)
    return math.log(4.0) + 0.5 * M * M + J * math.log(4 * math.e * M * M / J)


@dataclass(frozen=True)
class ChainLink:
    lhs: str
    rhs: str
    lhs_value: float
    rhs_value: float
    slack: float

    @property
    def passed(self):
        return self.lhs_value <= self.rhs_value + self.slack


@dataclass(frozen=True)
class ChainReport:
    values: dict
    links: tuple

    @property
    def passed(self):
        return all(link.passed for link in self.links)


def fdiv_chain_check(P, Q, *, noise_scale=1.0):
    """Check ``H^2/2 <= TV <= sqrt(KL/2) <= sqrt(chi2/2)`` and ``TV <= H <= sqrt(KL)``."""
    v = {k: divergence(k, P, Q, noise_scale=noise_scale) for k in DIVERGENCE_KINDS}
    tv, h2, kl, c2 = (v[k].value for k in DIVERGENCE_KINDS)
    e = {k: v[k].est_abs_error for k in DIVERGENCE_KINDS}

    def sqrt_err(x, err):
        # error of sqrt(x) given error of x
        return math.sqrt(x + err) - math.sqrt(x)

    links = (
        ChainLink("H2/2", "TV", h2 / 2, tv, 10 * (e["h2"] / 2 + e["tv"])),
        ChainLink("TV", "sqrt(KL/2)", tv, math.sqrt(kl / 2), 10 * (e["tv"] + sqrt_err(kl / 2, e["kl"] / 2))),
        ChainLink("sqrt(KL/2)", "sqrt(chi2/2)", math.sqrt(kl / 2), math.sqrt(c2 / 2),
                  10 * (sqrt_err(kl / 2, e["kl"] / 2) + sqrt_err(c2 / 2, e["chi2"] / 2))),
        ChainLink("TV", "H", tv, math.sqrt(h2), 10 * (e["tv"] + sqrt_err(h2, e["h2"]))),
        ChainLink("H", "sqrt(KL)", math.sqrt(h2), math.sqrt(kl), 10 * (sqrt_err(h2, e["h2"]) + sqrt_err(kl, e["kl"]))),
    )
    return ChainReport(v, links)


def tv_char_fn_lower(P, Q, omegas):
    """``max_w exp(-w^2/2) |E e^{iwX} - E e^{iwY}| / 2``, a TV lower bound for the mixtures."""
    omegas = [float(w) for w in np.atleast_1d(np.asarray(omegas, dtype=float))]
    if not omegas:
        raise ValidationError("omegas must be non-empty")
    if P == Q:
        return 0.0
    best = 0.0
    for w in omegas:
        val = math.exp(-0.5 * w * w) * abs(P.char_fn(w) - Q.char_fn(w)) / 2
        best = max(best, val)
    return best
