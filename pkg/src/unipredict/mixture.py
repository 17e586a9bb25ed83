"""Bayes mixtures over a finite model class."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .exceptions import ModelNotInClass, UndefinedConditional
from .measures import BitsLike, Measure, _rows, _safe_log, as_bits, bits_to_str

__all__ = [
    "ModelClass",
    "PosteriorState",
    "mixture_prob",
    "mixture_conditional",
    "posterior_weights",
]

WEIGHT_TOL = 1e-12


def _normalize_log_joint(log_joint: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior rows and their log normalizers; dead rows give ``-inf``."""
    norm = logsumexp(log_joint, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        post = np.exp(log_joint - norm)
    post = np.where(np.isfinite(norm), post, 0.0)
    return post, norm[..., 0]


def predictive_from_log_joint(log_joint, p0s, p1s):
    """Mixture one-step conditionals from per-model log joints.

    ``log_joint``, ``p0s`` and ``p1s`` are ``(m, K)``. Both conditionals are
    normalized by the same posterior mass so that symmetric classes give
    exactly equal values.
    """
    post, norm = _normalize_log_joint(log_joint)
    if np.any(~np.isfinite(norm)):
        raise UndefinedConditional("mixture has probability zero on this prefix")
    mass = post.sum(axis=-1)
    p1 = (post * p1s).sum(axis=-1) / mass
    p0 = (post * p0s).sum(axis=-1) / mass
    return p0, p1


class ModelClass(Measure):
    """Weighted finite list of measures, itself a measure (the mixture).

    Parameters
    ----------
    models : sequence of Measure
    weights : "uniform", a sequence of positive reals summing to one, or None
        ``None`` means uniform unless ``complexities`` is given.
    complexities : sequence of int, optional
        Description lengths ``c_i``; weights become ``2**-c_i`` normalized.
    """

    def __init__(self, models: Sequence[Measure], weights="uniform", complexities=None):
        models = tuple(models)
        if not models:
            raise ValueError("a model class needs at least one entry")
        explicit = weights is not None and not (isinstance(weights, str) and weights == "uniform")
        if complexities is not None:
            if explicit:
                raise ValueError("give either explicit weights or complexities, not both")
            c = np.asarray(complexities, dtype=float)
            if c.shape != (len(models),):
                raise ValueError("need one complexity per model")
            log_w = -c * np.log(2.0)
            log_w -= logsumexp(log_w)
            w = np.exp(log_w)
        elif not explicit:
            w = np.full(len(models), 1.0 / len(models))
            log_w = np.full(len(models), -np.log(len(models)))
        elif isinstance(weights, str):
            raise ValueError(f"unknown weighting scheme {weights!r}")
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (len(models),):
                raise ValueError(f"need {len(models)} weights, got {w.size}")
            if np.any(~(w > 0)):
                raise ValueError("all weights must be strictly positive")
            if abs(w.sum() - 1.0) > WEIGHT_TOL:
                raise ValueError(f"weights must sum to 1, got {w.sum():.17g}")
            log_w = np.log(w)
        self.models = models
        self.weights = w
        self.log_weights = log_w
        self.weights.flags.writeable = False
        self.log_weights.flags.writeable = False

    def __len__(self):
        return len(self.models)

    def __repr__(self):
        return f"ModelClass({len(self.models)} models)"

    def log_joint_batch(self, bits) -> np.ndarray:
        """``(m, K)`` array of ``ln w_i + ln mu_i(x)`` for each row."""
        bits = _rows(bits)
        cols = [mdl.log_prob_batch(bits) for mdl in self.models]
        return np.stack(cols, axis=1) + self.log_weights

    def model_next_probs(self, bits) -> tuple[np.ndarray, np.ndarray]:
        """Per-model conditionals, each ``(m, K)``."""
        pairs = [mdl.next_probs(bits) for mdl in self.models]
        p0 = np.stack([p[0] for p in pairs], axis=1)
        p1 = np.stack([p[1] for p in pairs], axis=1)
        return p0, p1

    def log_prob_batch(self, bits):
        return logsumexp(self.log_joint_batch(bits), axis=1)

    def next_probs(self, bits):
        p0s, p1s = self.model_next_probs(bits)
        return predictive_from_log_joint(self.log_joint_batch(bits), p0s, p1s)

    def weight_of(self, mu: Measure) -> float:
        """Total prior weight of the entries equal to ``mu``."""
        idx = [i for i, m in enumerate(self.models) if m is mu or m == mu]
        if not idx:
            raise ModelNotInClass(f"{mu!r} is not an entry of the model class")
        return float(self.weights[idx].sum())

    def d_mu(self, mu: Measure) -> float:
        """``ln(1 / w_mu)``, the entropy budget of ``mu``."""
        return float(-np.log(self.weight_of(mu)))


@dataclass(frozen=True)
class PosteriorState:
    """Posterior over the entries of a model class after observing ``prefix``.

    Dead models (zero likelihood) stay in place with log joint ``-inf``.
    """

    model_class: ModelClass
    prefix: tuple
    log_joint: np.ndarray

    @classmethod
    def initial(cls, model_class: ModelClass) -> "PosteriorState":
        return cls(model_class, (), np.array(model_class.log_weights))

    @classmethod
    def from_prefix(cls, model_class: ModelClass, prefix: BitsLike) -> "PosteriorState":
        bits = as_bits(prefix)
        lj = model_class.log_joint_batch(bits[None, :])[0]
        return cls(model_class, tuple(int(b) for b in bits), lj)

    def _bits(self):
        return np.asarray(self.prefix, dtype=np.int8)[None, :]

    def update(self, bit: int) -> "PosteriorState":
        """Condition on one more symbol; O(|M|)."""
        bit = int(bit)
        if bit not in (0, 1):
            raise ValueError("bit must be 0 or 1")
        p0s, p1s = self.model_class.model_next_probs(self._bits())
        factor = (p1s if bit else p0s)[0]
        lj = self.log_joint + _safe_log(factor)
        return PosteriorState(self.model_class, self.prefix + (bit,), lj)

    def extend(self, bits: BitsLike) -> "PosteriorState":
        state = self
        for b in as_bits(bits):
            state = state.update(b)
        return state

    @property
    def log_evidence(self) -> float:
        """``ln xi(prefix)``."""
        return float(logsumexp(self.log_joint))

    @property
    def alive(self) -> np.ndarray:
        return np.isfinite(self.log_joint)

    @property
    def posterior(self) -> np.ndarray:
        post, norm = _normalize_log_joint(self.log_joint[None, :])
        if not np.isfinite(norm[0]):
            raise UndefinedConditional(
                f"prefix {bits_to_str(self.prefix)!r} has mixture probability zero"
            )
        return post[0]

    def predictive(self) -> tuple[float, float]:
        """``(xi(0 | prefix), xi(1 | prefix))``."""
        p0s, p1s = self.model_class.model_next_probs(self._bits())
        p0, p1 = predictive_from_log_joint(self.log_joint[None, :], p0s, p1s)
        return float(p0[0]), float(p1[0])


def mixture_prob(M: ModelClass, x: BitsLike) -> float:
    """``xi(x) = sum_i w_i mu_i(x)``."""
    return M.prob(x)


def mixture_conditional(M: ModelClass, prefix: BitsLike, bit: int) -> float:
    state = PosteriorState.from_prefix(M, prefix)
    p0, p1 = state.predictive()
    return p1 if bit else p0


def posterior_weights(M: ModelClass, prefix: BitsLike) -> np.ndarray:
    return PosteriorState.from_prefix(M, prefix).posterior
