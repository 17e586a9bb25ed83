"""Scikit-learn style front end for online universal prediction."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_histories, check_sequence
from .decision import Predictor, error_loss
from .measures import BernoulliIID
from .mixture import ModelClass, PosteriorState


def default_models():
    return [BernoulliIID(i / 10) for i in range(1, 10)]


class UniversalPredictor(ClassifierMixin, BaseEstimator):
    """Bayes-mixture next-bit predictor with loss-optimal binary actions.

    ``fit`` conditions the mixture on an observed sequence; every other
    method treats the rows of ``X`` as continuations of that sequence.

    Parameters
    ----------
    models : list of Measure, optional
        Candidate environments; a Bernoulli grid over 0.1..0.9 by default.
    weights : "uniform" or sequence of float
    complexities : sequence of int, optional
        Description lengths giving weights ``2**-c`` (overrides ``weights``).
    loss : LossSpec, optional
        Loss driving :meth:`predict`; 0/1 error by default.
    """

    def __init__(self, models=None, weights="uniform", complexities=None, loss=None):
        self.models = models
        self.weights = weights
        self.complexities = complexities
        self.loss = loss

    def _build(self):
        models = default_models() if self.models is None else list(self.models)
        if self.complexities is not None:
            return ModelClass(models, None, complexities=self.complexities)
        return ModelClass(models, self.weights)

    def fit(self, X=None, y=None):
        self.model_class_ = self._build()
        self.loss_ = error_loss() if self.loss is None else self.loss
        self.classes_ = np.array([0, 1])
        self.n_models_ = len(self.model_class_)
        self.posterior_state_ = PosteriorState.initial(self.model_class_).extend(check_sequence(X))
        return self

    def partial_fit(self, X, y=None):
        if not hasattr(self, "posterior_state_"):
            return self.fit(X)
        self.posterior_state_ = self.posterior_state_.extend(check_sequence(X))
        return self

    @property
    def posterior_(self) -> np.ndarray:
        check_is_fitted(self, "posterior_state_")
        return self.posterior_state_.posterior

    def _full(self, X):
        check_is_fitted(self, "posterior_state_")
        X = check_histories(X)
        seen = np.asarray(self.posterior_state_.prefix, dtype=np.int8)
        return np.hstack([np.broadcast_to(seen, (X.shape[0], seen.size)), X]), seen.size

    def predict_proba(self, X):
        """``(n_samples, 2)`` next-bit probabilities after each history."""
        full, _ = self._full(X)
        p0, p1 = self.model_class_.next_probs(full)
        return np.column_stack([p0, p1])

    def predict(self, X):
        """Loss-minimizing action after each history."""
        full, _ = self._full(X)
        return Predictor(self.model_class_, self.loss_).actions(full.shape[1] + 1, full).astype(int)

    def transform(self, X):
        """Online predictions ``P(x_t = 1 | x_<t)`` for every position of each row."""
        full, start = self._full(X)
        out = np.empty((full.shape[0], full.shape[1] - start))
        for j in range(out.shape[1]):
            out[:, j] = self.model_class_.next_probs(full[:, : start + j])[1]
        return out

    def score(self, X, y=None):
        """Mean log predictive probability per symbol (higher is better)."""
        full, start = self._full(X)
        p1 = self.transform(X)
        bits = full[:, start:]
        with np.errstate(divide="ignore"):
            logp = np.log(np.where(bits == 1, p1, 1.0 - p1))
        return float(logp.mean()) if logp.size else 0.0
