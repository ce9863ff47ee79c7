"""Grid NPMLE for Gaussian location mixtures and empirical Hellinger rate scans."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .laws import Atomic, MixingLaw
from .mixtures import divergence

DEFAULT_STEP = 0.05
DEFAULT_PAD = 3.0
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 20000
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class BoundedSupport:
    """Priors supported on ``[-M, M]``."""

    M: float

    def __post_init__(self):
        if not (self.M > 0 and math.isfinite(self.M)):
            raise ValidationError(f"M must be positive and finite, got {self.M!r}")

    @property
    def interval(self):
        return -float(self.M), float(self.M)

    def to_dict(self):
        return {"kind": "bounded", "M": self.M}


@dataclass(frozen=True)
class SubWeibullSupport:
    """Priors with ``P(|X| > t) <= 2 exp(-(t/beta)^alpha)``, clipped where that tail drops below ``tail``."""

    alpha: float
    beta: float
    tail: float = 1e-8

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError("alpha and beta must be positive")
        if not 0 < self.tail < 1:
            raise ValidationError("tail must lie in (0, 1)")

    @property
    def interval(self):
        t = self.beta * math.log(2 / self.tail) ** (1 / self.alpha)
        return -t, t

    def to_dict(self):
        return {"kind": "subweibull", "alpha": self.alpha, "beta": self.beta, "tail": self.tail}


def constraint_from_dict(d):
    kind = str(d.get("kind", "")).lower()
    if kind == "bounded":
        return BoundedSupport(float(d["M"]))
    if kind == "subweibull":
        return SubWeibullSupport(float(d["alpha"]), float(d["beta"]), float(d.get("tail", 1e-8)))
    raise ValidationError(f"unknown constraint kind {kind!r}")


def default_grid(sample, constraint=None, step=DEFAULT_STEP, pad=DEFAULT_PAD):
    """Equispaced grid over the padded sample range, clipped to the constraint."""
    lo, hi = float(np.min(sample)) - pad, float(np.max(sample)) + pad
    if constraint is not None:
        clo, chi = constraint.interval
        lo, hi = max(lo, clo), min(hi, chi)
    if lo > hi:
        raise ValidationError("grid is empty after clipping to the constraint")
    k0, k1 = math.ceil(lo / step - 1e-9), math.floor(hi / step + 1e-9)
    grid = np.arange(k0, k1 + 1) * step
    if constraint is not None:
        # keep the interval endpoints so the boundary is representable
        grid = np.union1d(grid, [lo, hi]) if isinstance(constraint, BoundedSupport) else grid
    if grid.size == 0:
        grid = np.array([0.5 * (lo + hi)])
    return grid


@dataclass(frozen=True)
class NpmleProblem:
    sample: np.ndarray
    grid: np.ndarray
    constraint: object = None

    def __post_init__(self):
        x = np.sort(np.asarray(self.sample, dtype=float).ravel())
        g = np.asarray(self.grid, dtype=float).ravel()
        if x.size < 1:
            raise ValidationError("sample must be non-empty")
        if not np.all(np.isfinite(x)):
            raise ValidationError("sample must be finite")
        if g.size < 1 or not np.all(np.isfinite(g)):
            raise ValidationError("grid must be non-empty and finite")
        if np.any(np.diff(g) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if self.constraint is not None:
            lo, hi = self.constraint.interval
            if g[0] < lo - 1e-12 or g[-1] > hi + 1e-12:
                raise ValidationError(f"grid must lie inside the constraint interval [{lo}, {hi}]")
        object.__setattr__(self, "sample", x)
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_sample(cls, sample, constraint=None, step=DEFAULT_STEP, pad=DEFAULT_PAD):
        return cls(sample, default_grid(np.asarray(sample, dtype=float), constraint, step, pad), constraint)


@dataclass(frozen=True)
class NpmleFit:
    grid: np.ndarray
    weights: np.ndarray
    loglik: float
    iterations: int
    gradient_slack: float
    converged: bool
    loglik_trace: np.ndarray = field(repr=False)

    def to_law(self, min_weight=0.0):
        keep = self.weights > min_weight
        return Atomic.from_arrays(self.grid[keep], self.weights[keep])

    def to_dict(self):
        return {"grid": self.grid.tolist(), "weights": self.weights.tolist(), "loglik": self.loglik,
                "iterations": self.iterations, "gradient_slack": self.gradient_slack,
                "converged": self.converged}


class _Likelihood:
    """Row-scaled kernel ``phi(X_i - g_j) / max_j phi(X_i - g_j)``."""

    def __init__(self, sample, grid):
        logk = -0.5 * (sample[:, None] - grid[None, :]) ** 2
        self.row_log = logk.max(axis=1)
        self.K = np.exp(logk - self.row_log[:, None])
        self.offset = float(np.mean(self.row_log)) - _LOG_SQRT_2PI

    def mix(self, w):
        return self.K @ w

    def loglik(self, w):
        f = self.mix(w)
        if np.any(f <= 0):
            return -math.inf
        return float(np.mean(np.log(f))) + self.offset

    def gradient(self, w):
        """``D_j = (1/n) sum_i phi(X_i - g_j) / f_w(X_i)``."""
        f = self.mix(w)
        return (1.0 / f) @ self.K / f.size


def _simplex_qp(H, c, y, max_steps=None):
    """Primal active-set solve of ``min 1/2 y'Hy + c'y`` over the simplex, warm-started at ``y``."""
    n = y.size
    y = y.copy()
    W = y <= 0
    y[W] = 0.0
    for _ in range(max_steps or 4 * n + 20):
        F = np.flatnonzero(~W)
        k = F.size
        A = np.zeros((k + 1, k + 1))
        A[:k, :k] = H[np.ix_(F, F)]
        A[:k, k] = A[k, :k] = 1.0
        rhs = np.concatenate([-c[F], [1.0]])
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        z = np.zeros(n)
        z[F] = sol[:k]
        nu = sol[k]
        if np.all(z[F] >= 0):
            y = z
            if not W.any():
                return y
            mu = H[W] @ y + c[W] + nu
            j = int(np.argmin(mu))
            if mu[j] >= -1e-14 * (1 + abs(nu)):
                return y
            W[np.flatnonzero(W)[j]] = False
            continue
        d = z - y
        neg = F[z[F] < 0]
        ratios = y[neg] / (y[neg] - z[neg])
        i = int(np.argmin(ratios))
        y = y + ratios[i] * d
        y[neg[i]] = 0.0
        y = np.clip(y, 0.0, None)
        W[neg[i]] = True
    return y / y.sum()


def _em_step(lik, w):
    w1 = w * lik.gradient(w)
    return w1 / w1.sum()


def npmle_fit(problem, max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL, *, em_warmup=10):
    """Maximize the mean log-likelihood over mixing weights on ``problem.grid``.

    A few EM multiplicative updates are followed by sequential quadratic
    programming over the simplex (Newton model, active-set subproblem,
    backtracking). Every accepted step is non-decreasing in likelihood and an
    EM update is used whenever the line search stalls. Stops when the gradient
    slack ``max_j D_j - 1`` is at most ``tol``.
    """
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")
    lik = _Likelihood(problem.sample, problem.grid)
    w = np.full(problem.grid.size, 1.0 / problem.grid.size)
    ll = lik.loglik(w)
    if not math.isfinite(ll):
        raise NumericalError("log-likelihood is not finite at the uniform start")
    trace = [ll]
    it = 0
    D = lik.gradient(w)
    slack = float(D.max() - 1.0)
    while it < max_iters and slack > tol:
        it += 1
        cand = None
        if it > em_warmup:
            f = lik.mix(w)
            Kf = lik.K / f[:, None]
            H = Kf.T @ Kf / f.size
            H[np.diag_indices_from(H)] += 1e-12 * float(np.mean(np.diag(H)))
            y = _simplex_qp(H, -D - H @ w, w)
            step = y - w
            t = 1.0
            while t > 1e-12:
                trial = np.clip(w + t * step, 0.0, None)
                trial /= trial.sum()
                tl = lik.loglik(trial)
                if tl >= ll + 1e-4 * t * float(D @ step) or (tl >= ll and t == 1.0):
                    cand = trial
                    break
                t *= 0.5
        if cand is None:
            cand = _em_step(lik, w)
        new_ll = lik.loglik(cand)
        if not math.isfinite(new_ll):
            raise NumericalError("log-likelihood became non-finite")
        if new_ll < ll:
            # only reachable through rounding in an EM update
            new_ll = ll
        w, ll = cand, new_ll
        trace.append(ll)
        D = lik.gradient(w)
        slack = float(D.max() - 1.0)
    return NpmleFit(problem.grid, w, ll, it, slack, slack <= tol, np.asarray(trace))


def hellinger(P, Q):
    """``H(f_P, f_Q)`` with ``H^2 = int (sqrt f - sqrt g)^2``."""
    return math.sqrt(max(divergence("h2", P, Q).value, 0.0))


def rate_reference(n, constraint):
    """Reference rate ``eps_n`` for the constraint class."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    L = math.log(n)
    if isinstance(constraint, BoundedSupport):
        return L / math.sqrt(n * math.log1p(math.sqrt(L) / constraint.M))
    if isinstance(constraint, SubWeibullSupport):
        a = constraint.alpha
        return L / math.sqrt(n * math.log1p(L ** ((a - 2) / (2 * a)) / constraint.beta))
    raise ValidationError(f"unsupported constraint {constraint!r}")


def draw_sample(truth, n, seed):
    """``X = theta + Z`` with ``theta ~ truth`` and ``Z`` standard normal."""
    ss = np.random.SeedSequence(seed)
    s_theta, s_noise = ss.spawn(2)
    theta = truth.sample(n, seed=int(s_theta.generate_state(1, np.uint64)[0]))
    return np.asarray(theta, dtype=float) + np.random.default_rng(s_noise).standard_normal(n)


@dataclass(frozen=True)
class ReplicateResult:
    n: int
    replicate: int
    hellinger: float
    loglik: float
    iterations: int
    gradient_slack: float
    monotone: bool


@dataclass(frozen=True)
class RateRow:
    n: int
    mean_h: float
    se: float
    eps_n: float


@dataclass(frozen=True)
class RateTable:
    rows: tuple
    replicates: tuple

    def mean_h(self):
        return np.array([r.mean_h for r in self.rows])


def _one(args):
    truth, constraint, n, rep, seed, max_iters, tol = args
    x = draw_sample(truth, n, seed)
    fit = npmle_fit(NpmleProblem.from_sample(x, constraint), max_iters, tol)
    h = hellinger(fit.to_law(), truth)
    mono = bool(np.all(np.diff(fit.loglik_trace) >= 0))
    return ReplicateResult(n, rep, h, fit.loglik, fit.iterations, fit.gradient_slack, mono)


def rate_scan(truth, constraint, n_list, replicates, seed, *, workers=1,
              max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL):
    """Mean Hellinger error of the constrained NPMLE for each sample size."""
    if not isinstance(truth, MixingLaw):
        raise ValidationError("truth must be a MixingLaw")
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValidationError("n_list must be non-empty and strictly increasing")
    if n_list[0] < 2:
        raise ValidationError("every n must be >= 2")
    if int(replicates) < 1:
        raise ValidationError("replicates must be >= 1")
    children = np.random.SeedSequence(int(seed)).spawn(len(n_list) * int(replicates))
    jobs = []
    for i, n in enumerate(n_list):
        for r in range(int(replicates)):
            cs = int(children[i * int(replicates) + r].generate_state(1, np.uint64)[0])
            jobs.append((truth, constraint, n, r, cs, max_iters, tol))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as ex:
            results = list(ex.map(_one, jobs))
    else:
        results = [_one(j) for j in jobs]
    rows = []
    for n in n_list:
        hs = np.array([r.hellinger for r in results if r.n == n])
        se = float(hs.std(ddof=1) / math.sqrt(hs.size)) if hs.size > 1 else 0.0
        rows.append(RateRow(n, float(hs.mean()), se, rate_reference(n, constraint)))
    return RateTable(tuple(rows), tuple(results))
