"""scikit-learn style wrappers around the approximant constructions and the NPMLE."""

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_is_fitted

from .approximators import construct
from .errors import ValidationError
from .laws import MixingLaw
from .mixtures import MixtureDensity, divergence
from .npmle import DEFAULT_MAX_ITERS, DEFAULT_PAD, DEFAULT_STEP, DEFAULT_TOL, NpmleProblem, npmle_fit


def _as_1d(X):
    x = np.asarray(X, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValidationError("expected a single feature column")
        x = x[:, 0]
    if x.ndim != 1:
        raise ValidationError("expected a 1-D sample or an (n, 1) array")
    return x


class MixtureApproximator(BaseEstimator):
    """m-atomic approximant of a known mixing law.

    ``fit`` takes the target law itself rather than data.
    """

    def __init__(self, n_atoms=4, strategy="global", precision="double", M=None):
        self.n_atoms = n_atoms
        self.strategy = strategy
        self.precision = precision
        self.M = M

    def fit(self, X, y=None):
        if not isinstance(X, MixingLaw):
            raise ValidationError("MixtureApproximator.fit expects a MixingLaw")
        kw = {} if self.M is None else {"M": self.M}
        approx = construct(X, self.n_atoms, self.strategy, self.precision, **kw)
        self.target_ = X
        self.approximant_ = approx
        self.atoms_ = approx.atoms_array
        self.weights_ = approx.weights_array
        return self

    def score_samples(self, X):
        check_is_fitted(self, "approximant_")
        return np.log(MixtureDensity(self.approximant_)(_as_1d(X)))

    def divergence(self, kind="tv"):
        """Divergence between the approximant's mixture and the target's."""
        check_is_fitted(self, "approximant_")
        return divergence(kind, self.approximant_, self.target_).value


class NPMLE(DensityMixin, BaseEstimator):
    """Grid nonparametric MLE of the mixing law from a Gaussian location-mixture sample."""

    def __init__(self, constraint=None, step=DEFAULT_STEP, pad=DEFAULT_PAD,
                 max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL):
        self.constraint = constraint
        self.step = step
        self.pad = pad
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y=None):
        x = _as_1d(X)
        problem = NpmleProblem.from_sample(x, self.constraint, self.step, self.pad)
        fit = npmle_fit(problem, self.max_iters, self.tol)
        self.fit_ = fit
        self.grid_ = fit.grid
        self.weights_ = fit.weights
        self.loglik_ = fit.loglik
        self.n_iter_ = fit.iterations
        self.gradient_slack_ = fit.gradient_slack
        self.mixing_ = fit.to_law()
        return self

    def score_samples(self, X):
        check_is_fitted(self, "mixing_")
        return np.log(MixtureDensity(self.mixing_)(_as_1d(X)))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
