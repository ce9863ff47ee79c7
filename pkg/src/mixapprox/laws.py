"""One-dimensional mixing distributions.

Every law is an immutable, hashable value object exposing moments, the
characteristic function, density / cdf / quantile function (where they
exist), tail bounds and sampling. Atomic laws are the approximants; the
remaining variants are the targets being approximated.
"""

import math
from dataclasses import dataclass, field
from typing import ClassVar

import mpmath
import numpy as np
from scipy import special

from .errors import (
    DegenerateInputError,
    RangeError,
    UnsupportedLawError,
    ValidationError,
)
from .precision import Precision, as_precision, extended
from .quadrature import integrate

TAIL_EPS = 1e-17
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _check_float(name, value, *, positive=False, nonzero=False):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{name} must be finite, got {v}")
    if positive and v <= 0:
        raise ValidationError(f"{name} must be > 0, got {v}")
    if nonzero and v == 0:
        raise ValidationError(f"{name} must be nonzero")
    return v


def _check_order(k):
    if int(k) != k or k < 0:
        raise ValidationError(f"moment order must be a nonnegative integer, got {k!r}")
    return int(k)


def _even_only(k, value):
    return value if k % 2 == 0 else 0.0


class MixingLaw:
    """Base class. Subclasses are frozen dataclasses."""

    kind: ClassVar[str] = ""
    has_density: ClassVar[bool] = True
    symmetric: ClassVar[bool] = False

    # -- moments -----------------------------------------------------------
    def moment(self, k, precision=Precision.DOUBLE):
        """``E[X^k]``; an ``mpmath.mpf`` in extended precision."""
        k = _check_order(k)
        if as_precision(precision) is Precision.EXTENDED:
            with extended():
                return +self._moment_mp(k)
        if k == 0:
            return 1.0
        try:
            value = self._moment(k)
        except OverflowError:
            raise RangeError(f"moment of order {k} overflows double precision for {self!r}") from None
        if not math.isfinite(value):
            raise RangeError(f"moment of order {k} overflows double precision for {self!r}")
        return value

    def _moment(self, k):
        lo, hi = self.effective_support()
        v, _ = integrate(lambda x: x ** k * self.pdf(x), lo, hi,
                         points=self.breakpoints, atol=0.0, rtol=1e-14)
        return float(v)

    def _moment_mp(self, k):
        lo, hi = self.effective_support()
        pts = [lo, *[p for p in self.breakpoints if lo < p < hi], hi]
        return mpmath.quad(lambda x: x ** k * self._pdf_mp(x), pts)

    def _pdf_mp(self, x):
        return mpmath.mpf(float(self.pdf(np.array([float(x)]))[0]))

    # -- Fourier side --------------------------------------------------------
    def char_fn(self, omega):
        """``E[exp(i omega X)]`` for real ``omega``; conjugate-symmetric by construction."""
        omega = float(omega)
        if omega == 0.0:
            return complex(1.0, 0.0)
        if omega < 0:
            return self._char_fn(-omega).conjugate()
        return self._char_fn(omega)

    def _char_fn(self, omega):
        lo, hi = self.effective_support()
        if self.symmetric:
            re, _ = integrate(lambda x: 2.0 * np.cos(omega * x) * self.pdf(x), 0.0, hi,
                              points=self.breakpoints, atol=1e-14, rtol=0.0)
            return complex(float(re), 0.0)
        val, _ = integrate(lambda x: np.exp(1j * omega * x) * self.pdf(x), lo, hi,
                           points=self.breakpoints, atol=1e-14, rtol=0.0)
        return complex(val)

    def char_fn_mp(self, omega):
        """Extended-precision characteristic function; falls back to double."""
        return mpmath.mpc(self.char_fn(float(omega)))

    def trig_moment(self, k, delta):
        """``t_k(delta X) = E[exp(i k delta X)]``."""
        if int(k) != k:
            raise ValidationError(f"trigonometric moment order must be an integer, got {k!r}")
        delta = _check_float("delta", delta, positive=True)
        if k == 0:
            return complex(1.0, 0.0)
        return self.char_fn(int(k) * delta)

    # -- densities -------------------------------------------------------------
    def pdf(self, x):
        raise UnsupportedLawError(f"{self.kind} law has no density")

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    @property
    def support(self):
        raise NotImplementedError

    @property
    def breakpoints(self):
        return ()

    def effective_support(self, tail=TAIL_EPS):
        """Finite interval outside which the law has mass at most ``tail``."""
        lo, hi = self.support
        if math.isinf(lo):
            lo = float(self.ppf(np.array([tail / 2]))[0])
        if math.isinf(hi):
            # 1 - tail/2 rounds to 1 in double, so use the mirror image
            hi = -lo if self.symmetric else float(self.ppf(np.array([1.0 - tail / 2]))[0])
        return lo, hi

    def mass(self, lower, upper):
        """``P([lower, upper])``."""
        lower, upper = float(lower), float(upper)
        if upper < lower:
            return 0.0
        c = self.cdf(np.array([lower, upper]))
        return float(max(c[1] - c[0], 0.0))

    def sample(self, n, seed):
        """``n`` draws by inversion; deterministic given ``seed``."""
        n = int(n)
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        return np.asarray(self.ppf(rng.random(n)), dtype=float)

    def to_dict(self):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Atomic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atomic(MixingLaw):
    """Finitely supported law ``sum_i w_i delta_{theta_i}``."""

    atoms: tuple
    weights: tuple

    kind: ClassVar[str] = "atomic"
    has_density: ClassVar[bool] = False

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        if len(atoms) == 0:
            raise ValidationError("atomic law needs at least one atom")
        if len(atoms) != len(weights):
            raise ValidationError("atoms and weights must have the same length")
        if not all(math.isfinite(a) for a in atoms):
            raise ValidationError("atoms must be finite")
        if any(b <= a for a, b in zip(atoms, atoms[1:])):
            raise ValidationError("atoms must be strictly increasing")
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(math.fsum(weights) - 1.0) > 1e-14:
            raise ValidationError(f"weights must sum to 1 (got {math.fsum(weights)!r})")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_arrays(cls, atoms, weights=None, *, drop_zero=True):
        """Sort, merge coincident atoms and renormalise."""
        atoms = np.asarray(atoms, dtype=float).ravel()
        if weights is None:
            weights = np.full(atoms.size, 1.0)
        weights = np.asarray(weights, dtype=float).ravel()
        if atoms.size != weights.size:
            raise ValidationError("atoms and weights must have the same length")
        if atoms.size == 0:
            raise ValidationError("atomic law needs at least one atom")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("weights must be finite and nonnegative")
        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        uniq, inverse = np.unique(atoms, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, weights)
        if drop_zero:
            keep = merged > 0
            uniq, merged = uniq[keep], merged[keep]
        total = math.fsum(merged)
        if total <= 0:
            raise ValidationError("weights must have positive total mass")
        merged = merged / total
        # push the rounding residue onto the heaviest atom
        merged[np.argmax(merged)] += 1.0 - math.fsum(merged)
        return cls(tuple(uniq.tolist()), tuple(merged.tolist()))

    @classmethod
    def point(cls, x=0.0):
        return cls((float(x),), (1.0,))

    @property
    def size(self):
        return len(self.atoms)

    @property
    def atoms_array(self):
        return np.array(self.atoms)

    @property
    def weights_array(self):
        return np.array(self.weights)

    def _moment(self, k):
        return math.fsum(w * a ** k for a, w in zip(self.atoms, self.weights))

    def _moment_mp(self, k):
        return mpmath.fsum(mpmath.mpf(w) * mpmath.mpf(a) ** k
                           for a, w in zip(self.atoms, self.weights))

    def _char_fn(self, omega):
        return complex(np.dot(self.weights_array, np.exp(1j * omega * self.atoms_array)))

    def char_fn_mp(self, omega):
        omega = mpmath.mpf(omega)
        return mpmath.fsum(mpmath.mpf(w) * mpmath.expj(omega * mpmath.mpf(a))
                           for a, w in zip(self.atoms, self.weights))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.weights_array)])
        return np.minimum(cum[np.searchsorted(self.atoms_array, x, side="right")], 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        cum = np.cumsum(self.weights_array)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), self.size - 1)
        return self.atoms_array[idx]

    def mass(self, lower, upper):
        a = self.atoms_array
        sel = (a >= lower) & (a <= upper)
        return math.fsum(np.asarray(self.weights)[sel])

    @property
    def support(self):
        return self.atoms[0], self.atoms[-1]

    def effective_support(self, tail=TAIL_EPS):
        return self.support

    def sample(self, n, seed):
        if self.size == 1:
            n = int(n)
            if n < 1:
                raise ValidationError("sample size must be >= 1")
            return np.full(n, self.atoms[0])
        return super().sample(n, seed)

    def to_dict(self):
        return {"kind": self.kind, "atoms": list(self.atoms), "weights": list(self.weights)}


# ---------------------------------------------------------------------------
# Continuous families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform(MixingLaw):
    """Uniform law on ``[-halfwidth, halfwidth]``."""

    halfwidth: float

    kind: ClassVar[str] = "uniform"
    symmetric: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "halfwidth", _check_float("halfwidth", self.halfwidth, positive=True))

    def _moment(self, k):
        return _even_only(k, self.halfwidth ** k / (k + 1))

    def _moment_mp(self, k):
        if k % 2:
            return mpmath.mpf(0)
        return mpmath.mpf(self.halfwidth) ** k / (k + 1)

    def _char_fn(self, omega):
        return complex(float(np.sinc(omega * self.halfwidth / math.pi)), 0.0)

    def char_fn_mp(self, omega):
        x = mpmath.mpf(omega) * mpmath.mpf(self.halfwidth)
        return mpmath.mpc(mpmath.sinc(x) if x != 0 else 1)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= self.halfwidth, 0.5 / self.halfwidth, 0.0)

    def _pdf_mp(self, x):
        return mpmath.mpf(1) / (2 * mpmath.mpf(self.halfwidth)) if abs(x) <= self.halfwidth else mpmath.mpf(0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x + self.halfwidth) / (2 * self.halfwidth), 0.0, 1.0)

    def ppf(self, u):
        return (2.0 * np.asarray(u, dtype=float) - 1.0) * self.halfwidth

    @property
    def support(self):
        return -self.halfwidth, self.halfwidth

    @property
    def breakpoints(self):
        return (-self.halfwidth, self.halfwidth)

    def to_dict(self):
        return {"kind": self.kind, "halfwidth": self.halfwidth}


@dataclass(frozen=True)
class Gaussian(MixingLaw):
    """Centred normal law ``N(0, stddev^2)``."""

    stddev: float

    kind: ClassVar[str] = "gaussian"
    symmetric: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "stddev", _check_float("stddev", self.stddev, positive=True))

    def _moment(self, k):
        if k % 2:
            return 0.0
        return self.stddev ** k * float(special.factorial2(k - 1, exact=True))

    def _moment_mp(self, k):
        if k % 2:
            return mpmath.mpf(0)
        return mpmath.mpf(self.stddev) ** k * mpmath.fac2(k - 1)

    def _char_fn(self, omega):
        return complex(math.exp(-0.5 * (omega * self.stddev) ** 2), 0.0)

    def char_fn_mp(self, omega):
        return mpmath.mpc(mpmath.exp(-(mpmath.mpf(omega) * self.stddev) ** 2 / 2))

    def pdf(self, x):
        z = np.asarray(x, dtype=float) / self.stddev
        return np.exp(-0.5 * z * z) / (_SQRT2PI * self.stddev)

    def _pdf_mp(self, x):
        s = mpmath.mpf(self.stddev)
        return mpmath.npdf(x, 0, s)

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=float) / self.stddev)

    def ppf(self, u):
        return self.stddev * special.ndtri(np.asarray(u, dtype=float))

    @property
    def support(self):
        return -math.inf, math.inf

    def to_dict(self):
        return {"kind": self.kind, "stddev": self.stddev}


def subweibull_normalizer(shape):
    """``C_alpha = 1 / int exp(-|x|^alpha) dx = alpha / (2 Gamma(1/alpha))``."""
    return shape / (2.0 * math.gamma(1.0 / shape))


@dataclass(frozen=True)
class SubWeibull(MixingLaw):
    """Density ``(C_alpha / beta) exp(-|x / beta|^alpha)``."""

    shape: float
    scale: float

    kind: ClassVar[str] = "subweibull"
    symmetric: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "shape", _check_float("shape", self.shape, positive=True))
        object.__setattr__(self, "scale", _check_float("scale", self.scale, positive=True))

    @property
    def normalizer(self):
        return subweibull_normalizer(self.shape)

    def _moment(self, k):
        if k % 2:
            return 0.0
        a = self.shape
        return math.exp(k * math.log(self.scale) + math.lgamma((k + 1) / a) - math.lgamma(1 / a))

    def _moment_mp(self, k):
        if k % 2:
            return mpmath.mpf(0)
        a = mpmath.mpf(self.shape)
        return mpmath.mpf(self.scale) ** k * mpmath.gamma((k + 1) / a) / mpmath.gamma(1 / a)

    def pdf(self, x):
        z = np.abs(np.asarray(x, dtype=float)) / self.scale
        return self.normalizer / self.scale * np.exp(-z ** self.shape)

    def _pdf_mp(self, x):
        a = mpmath.mpf(self.shape)
        c = a / (2 * mpmath.gamma(1 / a))
        return c / self.scale * mpmath.exp(-(abs(x) / self.scale) ** a)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p = special.gammainc(1.0 / self.shape, (np.abs(x) / self.scale) ** self.shape)
        return 0.5 + 0.5 * np.sign(x) * p

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        p = np.abs(2.0 * u - 1.0)
        r = self.scale * special.gammaincinv(1.0 / self.shape, p) ** (1.0 / self.shape)
        return np.sign(u - 0.5) * r

    def effective_support(self, tail=TAIL_EPS):
        r = self.scale * special.gammainccinv(1.0 / self.shape, tail) ** (1.0 / self.shape)
        return -float(r), float(r)

    @property
    def support(self):
        return -math.inf, math.inf

    @property
    def breakpoints(self):
        return (0.0,)

    def sample(self, n, seed):
        # |X|/beta = G^(1/alpha) with G ~ Gamma(1/alpha): exact, no tabulated CDF
        n = int(n)
        if n < 1:
            raise ValidationError("sample size must be >= 1")
        rng = np.random.default_rng(seed)
        g = rng.gamma(1.0 / self.shape, size=n)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * self.scale * g ** (1.0 / self.shape)

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Laplace(MixingLaw):
    """Density ``exp(-|x|/scale) / (2 scale)``."""

    scale: float

    kind: ClassVar[str] = "laplace"
    symmetric: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "scale", _check_float("scale", self.scale, positive=True))

    def _moment(self, k):
        if k % 2:
            return 0.0
        return math.exp(math.lgamma(k + 1) + k * math.log(self.scale))

    def _moment_mp(self, k):
        if k % 2:
            return mpmath.mpf(0)
        return mpmath.factorial(k) * mpmath.mpf(self.scale) ** k

    def _char_fn(self, omega):
        return complex(1.0 / (1.0 + (omega * self.scale) ** 2), 0.0)

    def char_fn_mp(self, omega):
        return mpmath.mpc(1 / (1 + (mpmath.mpf(omega) * self.scale) ** 2))

    def pdf(self, x):
        return np.exp(-np.abs(np.asarray(x, dtype=float)) / self.scale) / (2 * self.scale)

    def _pdf_mp(self, x):
        return mpmath.exp(-abs(x) / self.scale) / (2 * mpmath.mpf(self.scale))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        e = 0.5 * np.exp(-np.abs(x) / self.scale)
        return np.where(x < 0, e, 1.0 - e)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(u < 0.5, self.scale * np.log(2 * u), -self.scale * np.log(2 * (1 - u)))

    def effective_support(self, tail=TAIL_EPS):
        r = self.scale * math.log(1.0 / tail)
        return -r, r

    @property
    def support(self):
        return -math.inf, math.inf

    @property
    def breakpoints(self):
        return (0.0,)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class TruncPareto(MixingLaw):
    """Density ``normalizer * x^-(shape+1)`` on ``[lower, ratio * lower]``."""

    shape: float
    lower: float
    ratio: float
    normalizer: float

    kind: ClassVar[str] = "truncpareto"

    def __post_init__(self):
        for name in ("shape", "lower", "normalizer"):
            object.__setattr__(self, name, _check_float(name, getattr(self, name), positive=True))
        ratio = _check_float("ratio", self.ratio)
        if ratio <= 1:
            raise ValidationError(f"ratio must be > 1, got {ratio}")
        object.__setattr__(self, "ratio", ratio)
        total = self.normalizer * self.lower ** -self.shape * -math.expm1(-self.shape * math.log(ratio)) / self.shape
        if abs(total - 1.0) > 1e-10:
            raise ValidationError(f"truncated Pareto density integrates to {total!r}, not 1")

    @classmethod
    def normalized(cls, shape, lower, ratio):
        a = shape * lower ** shape / -math.expm1(-shape * math.log(ratio))
        return cls(shape, lower, ratio, a)

    @classmethod
    def moment_constrained(cls, shape, beta, m):
        """Hardest law in ``{E|X|^shape <= beta^shape}`` at ``m`` components.

        ``r = m / beta``, ``k = r (log r)^(1/shape)``, ``a = beta^shape / log k``,
        ``b = (a (1 - k^-shape) / shape)^(1/shape)``.
        """
        r = m / beta
        if r <= math.e:
            raise ValidationError(f"need m / beta > e for the moment-constrained test law (got {r})")
        k = r * math.log(r) ** (1.0 / shape)
        a = beta ** shape / math.log(k)
        b = (a * -math.expm1(-shape * math.log(k)) / shape) ** (1.0 / shape)
        return cls(shape, b, k, a)

    @property
    def upper(self):
        return self.lower * self.ratio

    @property
    def alpha_moment_scale(self):
        """``beta`` with ``E|X|^shape = beta^shape``."""
        return (self.normalizer * math.log(self.ratio)) ** (1.0 / self.shape)

    def _moment(self, k):
        a, al, b, kb = self.normalizer, self.shape, self.lower, self.upper
        if k == al:
            return a * math.log(self.ratio)
        e = k - al
        return a * (kb ** e - b ** e) / e

    def _moment_mp(self, k):
        a, al = mpmath.mpf(self.normalizer), mpmath.mpf(self.shape)
        b = mpmath.mpf(self.lower)
        kb = b * self.ratio
        if k == al:
            return a * mpmath.log(mpmath.mpf(self.ratio))
        e = k - al
        return a * (kb ** e - b ** e) / e

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        safe = np.where(inside, x, 1.0)
        return np.where(inside, self.normalizer * safe ** -(self.shape + 1), 0.0)

    def _pdf_mp(self, x):
        if self.lower <= x <= self.upper:
            return self.normalizer * mpmath.mpf(x) ** -(self.shape + 1)
        return mpmath.mpf(0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        return np.clip(self.normalizer * (self.lower ** -self.shape - x ** -self.shape) / self.shape, 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return (self.lower ** -self.shape - self.shape * u / self.normalizer) ** (-1.0 / self.shape)

    @property
    def support(self):
        return self.lower, self.upper

    @property
    def breakpoints(self):
        return (self.lower, self.upper)

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "lower": self.lower,
                "ratio": self.ratio, "normalizer": self.normalizer}


@dataclass(frozen=True)
class Arc(MixingLaw):
    """Arc test density on ``[-b, b]`` (radians), ``0 < b < pi``.

    ``f(theta) = sqrt(g^2 - sin^2(theta/2)) cos(theta/2) / (pi g^2)`` with
    ``g = sin(b/2)``. Equivalently ``theta = 2 arcsin(g x)`` where ``x`` has
    the semicircle density ``(2/pi) sqrt(1 - x^2)``.
    """

    b: float

    kind: ClassVar[str] = "arc"
    symmetric: ClassVar[bool] = True

    def __post_init__(self):
        b = _check_float("b", self.b, positive=True)
        if b >= math.pi:
            raise ValidationError(f"arc half-angle must be < pi, got {b}")
        object.__setattr__(self, "b", b)

    @property
    def gamma(self):
        return math.sin(self.b / 2)

    def _semicircle_rule(self, omega=0.0):
        n = int(200 + 4 * abs(omega) * self.b + 40 / max(1e-3, 1 - self.gamma))
        j = np.arange(1, n + 1)
        t = j * math.pi / (n + 1)
        return np.cos(t), 2.0 / (n + 1) * np.sin(t) ** 2

    def _angles(self, x):
        return 2.0 * np.arcsin(self.gamma * x)

    def _moment(self, k):
        if k % 2:
            return 0.0
        x, w = self._semicircle_rule(float(k))
        return float(np.dot(w, self._angles(x) ** k))

    def _moment_mp(self, k):
        if k % 2:
            return mpmath.mpf(0)
        g = mpmath.sin(mpmath.mpf(self.b) / 2)
        f = lambda x: (2 * mpmath.asin(g * x)) ** k * 2 / mpmath.pi * mpmath.sqrt(1 - x * x)
        return mpmath.quad(f, [-1, 0, 1])

    def _char_fn(self, omega):
        x, w = self._semicircle_rule(omega)
        return complex(float(np.dot(w, np.cos(omega * self._angles(x)))), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        g = self.gamma
        s = np.sin(x / 2)
        inside = np.abs(x) <= self.b
        rad = np.clip(g * g - s * s, 0.0, None)
        return np.where(inside, np.sqrt(rad) * np.cos(x / 2) / (math.pi * g * g), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.b, self.b)
        y = np.clip(np.sin(x / 2) / self.gamma, -1.0, 1.0)
        return np.clip(0.5 + (y * np.sqrt(1 - y * y) + np.arcsin(y)) / math.pi, 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        lo = np.full(u.shape, -1.0)
        hi = np.full(u.shape, 1.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            g = 0.5 + (mid * np.sqrt(1 - mid * mid) + np.arcsin(mid)) / math.pi
            below = g < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return self._angles(0.5 * (lo + hi))

    @property
    def support(self):
        return -self.b, self.b

    @property
    def breakpoints(self):
        return (-self.b, 0.0, self.b)

    def to_dict(self):
        return {"kind": self.kind, "b": self.b}


# ---------------------------------------------------------------------------
# Wrappers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Conditioned(MixingLaw):
    """``base`` conditioned on ``[lower, upper]``."""

    base: MixingLaw
    lower: float
    upper: float
    mass: float = field(default=None, compare=False)

    kind: ClassVar[str] = "conditioned"

    def __post_init__(self):
        lo = _check_float("lower", self.lower)
        hi = _check_float("upper", self.upper)
        if not lo < hi:
            raise ValidationError(f"need lower < upper, got [{lo}, {hi}]")
        if not self.base.has_density:
            raise UnsupportedLawError("use condition() for atomic laws")
        mass = MixingLaw.mass(self.base, lo, hi)
        if not mass > 1e-300:
            raise DegenerateInputError(f"interval [{lo}, {hi}] has zero base mass")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "mass", mass)

    # ``mass`` doubles as a method name on the base class
    def interval_mass(self, lower, upper):
        return MixingLaw.mass(self, lower, upper)

    @property
    def support(self):
        blo, bhi = self.base.support
        return max(blo, self.lower), min(bhi, self.upper)

    @property
    def breakpoints(self):
        lo, hi = self.support
        inner = [p for p in self.base.breakpoints if lo < p < hi]
        return (lo, *inner, hi)

    @property
    def _uniform_base(self):
        return isinstance(self.base, Uniform)

    def _moment(self, k):
        if self._uniform_base:
            lo, hi = self.support
            return (hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (hi - lo))
        return super()._moment(k)

    def _moment_mp(self, k):
        lo, hi = (mpmath.mpf(v) for v in self.support)
        if self._uniform_base:
            return (hi ** (k + 1) - lo ** (k + 1)) / ((k + 1) * (hi - lo))
        pts = [lo, *[p for p in self.base.breakpoints if lo < p < hi], hi]
        mass = mpmath.quad(self.base._pdf_mp, pts)
        return mpmath.quad(lambda x: x ** k * self.base._pdf_mp(x), pts) / mass

    def _char_fn(self, omega):
        if self._uniform_base:
            lo, hi = self.support
            val = (np.exp(1j * omega * hi) - np.exp(1j * omega * lo)) / (1j * omega * (hi - lo))
            return complex(val)
        lo, hi = self.support
        val, _ = integrate(lambda x: np.exp(1j * omega * x) * self.pdf(x), lo, hi,
                           points=self.breakpoints, atol=1e-14, rtol=0.0)
        return complex(val)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, self.base.pdf(x) / self.mass, 0.0)

    def _pdf_mp(self, x):
        if self.lower <= x <= self.upper:
            return self.base._pdf_mp(x) / self.mass
        return mpmath.mpf(0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        f0 = self.base.cdf(np.array([self.lower]))[0]
        return np.clip((self.base.cdf(x) - f0) / self.mass, 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        f0 = self.base.cdf(np.array([self.lower]))[0]
        return np.clip(self.base.ppf(f0 + u * self.mass), self.lower, self.upper)

    def effective_support(self, tail=TAIL_EPS):
        lo, hi = self.support
        blo, bhi = self.base.effective_support(tail * self.mass)
        return max(lo, blo), min(hi, bhi)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(),
                "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class Scaled(MixingLaw):
    """Law of ``factor * X`` for ``X ~ base``."""

    base: MixingLaw
    factor: float

    kind: ClassVar[str] = "scaled"

    def __post_init__(self):
        object.__setattr__(self, "factor", _check_float("factor", self.factor, nonzero=True))

    @property
    def has_density(self):
        return self.base.has_density

    @property
    def symmetric(self):
        return self.base.symmetric

    def _moment(self, k):
        return self.factor ** k * self.base.moment(k)

    def _moment_mp(self, k):
        return mpmath.mpf(self.factor) ** k * self.base._moment_mp(k)

    def _char_fn(self, omega):
        return self.base.char_fn(self.factor * omega)

    def char_fn_mp(self, omega):
        return self.base.char_fn_mp(mpmath.mpf(self.factor) * omega)

    def pdf(self, x):
        c = self.factor
        return self.base.pdf(np.asarray(x, dtype=float) / c) / abs(c)

    def _pdf_mp(self, x):
        return self.base._pdf_mp(x / mpmath.mpf(self.factor)) / abs(self.factor)

    def cdf(self, x):
        y = np.asarray(x, dtype=float) / self.factor
        return self.base.cdf(y) if self.factor > 0 else 1.0 - self.base.cdf(y)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.factor * self.base.ppf(u if self.factor > 0 else 1.0 - u)

    @property
    def support(self):
        lo, hi = (self.factor * v for v in self.base.support)
        return min(lo, hi), max(lo, hi)

    def effective_support(self, tail=TAIL_EPS):
        lo, hi = (self.factor * v for v in self.base.effective_support(tail))
        return min(lo, hi), max(lo, hi)

    @property
    def breakpoints(self):
        return tuple(sorted(self.factor * p for p in self.base.breakpoints))

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "factor": self.factor}


# ---------------------------------------------------------------------------
# Functional API
# ---------------------------------------------------------------------------

def moment(law, k, precision=Precision.DOUBLE):
    return law.moment(k, precision)


def trig_moment(law, k, delta):
    return law.trig_moment(k, delta)


def scale(law, factor):
    """Law of ``factor * X``, collapsed to a closed-form variant when possible."""
    c = _check_float("factor", factor, nonzero=True)
    if c == 1.0:
        return law
    if isinstance(law, Atomic):
        return Atomic.from_arrays(c * law.atoms_array, law.weights_array, drop_zero=False)
    if isinstance(law, Uniform):
        return Uniform(abs(c) * law.halfwidth)
    if isinstance(law, Gaussian):
        return Gaussian(abs(c) * law.stddev)
    if isinstance(law, Laplace):
        return Laplace(abs(c) * law.scale)
    if isinstance(law, SubWeibull):
        return SubWeibull(law.shape, abs(c) * law.scale)
    if isinstance(law, Scaled):
        return scale(law.base, c * law.factor)
    return Scaled(law, c)


def condition(law, lower, upper):
    """Condition ``law`` on ``[lower, upper]``.

    The returned law carries the base probability of the interval as
    ``.mass`` (``Conditioned``) or can be queried with ``law.mass``.
    """
    lower = _check_float("lower", lower)
    upper = _check_float("upper", upper)
    if not lower < upper:
        raise ValidationError(f"need lower < upper, got [{lower}, {upper}]")
    if isinstance(law, Atomic):
        a, w = law.atoms_array, law.weights_array
        sel = (a >= lower) & (a <= upper)
        if not np.any(sel) or w[sel].sum() <= 1e-300:
            raise DegenerateInputError(f"interval [{lower}, {upper}] has zero mass")
        if np.all(sel):
            return law
        return Atomic.from_arrays(a[sel], w[sel])
    if isinstance(law, Conditioned):
        lo, hi = max(lower, law.lower), min(upper, law.upper)
        if not lo < hi:
            raise DegenerateInputError(f"interval [{lower}, {upper}] has zero mass")
        return Conditioned(law.base, lo, hi)
    return Conditioned(law, lower, upper)


def sample(law, n, seed):
    return law.sample(n, seed)


def subweibull_orlicz_factor(shape):
    """``k_alpha = (1 - 2^-alpha)^(-1/alpha)``: the density law with scale
    ``beta`` lies in the Orlicz ball of radius ``k_alpha * beta``."""
    return (1.0 - 2.0 ** -shape) ** (-1.0 / shape)


def tail_probability_bound(law, t):
    """Printed upper bound on ``P(|X| >= t)``, clamped to ``[0, 1]``.

    Sub-Weibull laws use ``2 exp(-(t/beta)^alpha)``; Laplace and Gaussian laws
    are the ``alpha = 1`` and ``alpha = 2`` members (``beta = scale`` and
    ``beta = sqrt(2) sigma``). For ``alpha < 1`` the density scale is inflated
    to the Orlicz radius ``k_alpha beta``. The truncated Pareto law uses the
    moment-family bound ``2 (beta/t)^alpha`` with ``beta^alpha = E|X|^alpha``.
    """
    t = _check_float("t", t)
    if t < 0:
        raise ValidationError("t must be >= 0")
    alpha, beta = orlicz_parameters(law)
    if isinstance(law, TruncPareto):
        bound = 2.0 * (beta / t) ** alpha if t > 0 else math.inf
    else:
        bound = 2.0 * math.exp(-((t / beta) ** alpha))
    return min(1.0, max(0.0, bound))


def orlicz_parameters(law):
    """``(alpha, beta)`` for which the printed tail bound holds."""
    if isinstance(law, SubWeibull):
        beta = law.scale if law.shape >= 1 else subweibull_orlicz_factor(law.shape) * law.scale
        return law.shape, beta
    if isinstance(law, Laplace):
        return 1.0, law.scale
    if isinstance(law, Gaussian):
        return 2.0, math.sqrt(2.0) * law.stddev
    if isinstance(law, TruncPareto):
        return law.shape, law.alpha_moment_scale
    raise UnsupportedLawError(f"no tail bound available for {law.kind} laws")


_KINDS = {cls.kind: cls for cls in (Atomic, Uniform, Gaussian, SubWeibull, Laplace,
                                     TruncPareto, Arc, Conditioned, Scaled)}

_ALIASES = {"unif": "uniform", "normal": "gaussian", "pareto": "truncpareto",
            "truncated_pareto": "truncpareto", "sub_weibull": "subweibull"}


def law_from_dict(d):
    """Inverse of ``law.to_dict()``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ValidationError(f"law dict must be an object with a 'kind' field, got {d!r}")
    kind = str(d["kind"]).lower()
    kind = _ALIASES.get(kind, kind)
    params = {k: v for k, v in d.items() if k != "kind"}
    try:
        if kind == "atomic":
            return Atomic(tuple(params["atoms"]), tuple(params["weights"]))
        if kind == "conditioned":
            return Conditioned(law_from_dict(params["base"]), params["lower"], params["upper"])
        if kind == "scaled":
            return Scaled(law_from_dict(params["base"]), params["factor"])
        if kind == "truncpareto" and "normalizer" not in params:
            return TruncPareto.normalized(params["shape"], params["lower"], params["ratio"])
        cls = _KINDS[kind]
    except KeyError as exc:
        raise ValidationError(f"law dict {d!r}: missing or unknown field {exc}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValidationError(f"law dict {d!r}: {exc}") from None
