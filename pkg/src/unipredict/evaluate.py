"""Exact and Monte Carlo evaluation of expected losses and entropy sums.

The exact engine walks the prefix tree breadth-first, one level per step,
holding every non-null prefix of the environment as a row of a numpy array.
Level totals are reduced with :func:`math.fsum`, which is correctly rounded
and therefore independent of the row order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .decision import LossSpec, Predictor
from .exceptions import DominanceViolation, HorizonTooLarge
from .measures import Measure, _safe_log
from .mixture import ModelClass, predictive_from_log_joint

__all__ = [
    "DEFAULT_EXACT_CAP",
    "EvalReport",
    "LossTrace",
    "evaluate",
    "standard_schemes",
    "exact_expected_loss",
    "exact_entropy",
    "convergence_sum",
    "mc_expected_loss",
    "mc_losses",
]

DEFAULT_EXACT_CAP = 20
MC_BLOCK = 8192


class LossTrace(NamedTuple):
    per_step: np.ndarray
    cumulative: np.ndarray

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0


def _cumsum(values) -> np.ndarray:
    # prefix sums through fsum keep round-off independent of n
    return np.array([math.fsum(values[: i + 1]) for i in range(len(values))])


@dataclass
class EvalReport:
    n: int
    step_losses: dict = field(default_factory=dict)
    h: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    d_mu: Optional[float] = None
    n_prefixes: int = 0
    n_pruned: int = 0
    actions: Optional[dict] = None

    def loss(self, name: str) -> LossTrace:
        per = np.asarray(self.step_losses[name])
        return LossTrace(per, _cumsum(per))

    def L(self, name: str, n: Optional[int] = None) -> float:
        per = self.step_losses[name]
        return math.fsum(per[: self.n if n is None else n])

    @property
    def H(self) -> np.ndarray:
        """Cumulative entropy ``H_1 .. H_n``."""
        return _cumsum(self.h)

    @property
    def S(self) -> np.ndarray:
        """Cumulative squared-difference sums ``S_1 .. S_n``."""
        return _cumsum(self.s)

    def csv_rows(self, xi="xi", mu="mu"):
        """Rows ``t, L_xi_cum, L_mu_cum, h_t, H_cum, S_cum``."""
        lx, lm = self.loss(xi).cumulative, self.loss(mu).cumulative
        H, S = self.H, self.S
        for t in range(1, self.n + 1):
            yield (t, lx[t - 1], lm[t - 1], self.h[t - 1], H[t - 1], S[t - 1])


def standard_schemes(mu: Measure, model_class: ModelClass, loss: LossSpec) -> dict:
    """The universal and informed schemes, keyed ``"xi"`` and ``"mu"``."""
    return {"xi": Predictor(model_class, loss), "mu": Predictor(mu, loss)}


class _Sources:
    """Per-level conditionals of every predictive source, kept incrementally.

    Mixture sources carry an ``(m, K)`` log-joint array that is extended
    with each appended bit instead of being recomputed from scratch.
    """

    def __init__(self, mu, sources, bits):
        self.mu = mu
        self.mixtures = []
        self.others = []
        for src in sources:
            if src is mu:
                continue
            if isinstance(src, ModelClass):
                if not any(src is m for m in self.mixtures):
                    self.mixtures.append(src)
            elif not any(src is o for o in self.others):
                self.others.append(src)
        self.log_joint = [m.log_joint_batch(bits) for m in self.mixtures]

    def conditionals(self, bits):
        self._model_probs = [m.model_next_probs(bits) for m in self.mixtures]
        out = {id(self.mu): self.mu.next_probs(bits)}
        for mix, lj, (p0s, p1s) in zip(self.mixtures, self.log_joint, self._model_probs):
            out[id(mix)] = predictive_from_log_joint(lj, p0s, p1s)
        for src in self.others:
            out[id(src)] = src.next_probs(bits)
        return out

    def extend(self, select, bit):
        """Keep rows ``select`` (index array or mask) of the children with ``bit``."""
        grown = []
        for lj, (p0s, p1s) in zip(self.log_joint, self._model_probs):
            factor = p1s if bit else p0s
            grown.append(lj[select] + _safe_log(factor[select]))
        return grown


def _step_losses(t, bits, schemes, cond, p_mu, table_cache, acts_out=None):
    out = {}
    rows = np.arange(bits.shape[0])
    for name, sch in schemes.items():
        p0, p1 = cond[id(sch.rho)]
        key = id(sch.loss)
        if key not in table_cache:
            table_cache[key] = sch.loss.tables(t, bits)
        lt = table_cache[key]
        act = sch.actions(t, bits, p0, p1)
        if acts_out is not None:
            acts_out.setdefault(name, []).append(act)
        out[name] = p_mu[0] * lt[rows, 0, act] + p_mu[1] * lt[rows, 1, act]
    return out


def _entropy_terms(p_mu, p_xi):
    terms = np.zeros_like(p_mu[0])
    for pm, px in zip(p_mu, p_xi):
        live = pm > 0
        if np.any(live & ~(px > 0)):
            raise DominanceViolation("mixture gives zero to an outcome of positive probability")
        with np.errstate(divide="ignore", invalid="ignore"):
            terms += np.where(live, pm * (np.log(pm) - np.log(px)), 0.0)
    sq = (p_mu[0] - p_xi[0]) ** 2 + (p_mu[1] - p_xi[1]) ** 2
    return terms, sq


def evaluate(
    mu: Measure,
    n: int,
    model_class: Optional[ModelClass] = None,
    schemes: Optional[Mapping[str, Predictor]] = None,
    exact_cap: int = DEFAULT_EXACT_CAP,
    record_actions: bool = False,
) -> EvalReport:
    """Exact expectations under ``mu`` for steps ``1..n``.

    Entropy and squared-difference terms are computed when ``model_class``
    is given; ``mu`` must then be one of its entries. With
    ``record_actions`` the report keeps, per scheme, one action array per
    level in the enumeration's row order.
    """
    if n < 1:
        raise ValueError("horizon must be at least 1")
    if n > exact_cap:
        raise HorizonTooLarge(f"n={n} exceeds the exact cap {exact_cap}; use Monte Carlo")
    schemes = dict(schemes or {})
    d_mu = model_class.d_mu(mu) if model_class is not None else None

    bits = np.zeros((1, 0), dtype=np.int8)
    log_mu = np.zeros(1)
    srcs = [s.rho for s in schemes.values()]
    if model_class is not None:
        srcs.append(model_class)
    sources = _Sources(mu, srcs, bits)

    report = EvalReport(n=n, d_mu=d_mu, actions={} if record_actions else None)
    losses = {name: [] for name in schemes}
    h, s = [], []
    for t in range(1, n + 1):
        w = np.exp(log_mu)
        report.n_prefixes += bits.shape[0]
        cond = sources.conditionals(bits)
        p_mu = cond[id(mu)]
        for name, vals in _step_losses(t, bits, schemes, cond, p_mu, {}, report.actions).items():
            losses[name].append(math.fsum(w * vals))
        if model_class is not None:
            ht, st = _entropy_terms(p_mu, cond[id(model_class)])
            h.append(math.fsum(w * ht))
            s.append(math.fsum(w * st))
        if t == n:
            break
        keep0 = np.flatnonzero(p_mu[0] > 0)
        keep1 = np.flatnonzero(p_mu[1] > 0)
        report.n_pruned += 2 * bits.shape[0] - keep0.size - keep1.size
        lj0 = sources.extend(keep0, 0)
        lj1 = sources.extend(keep1, 1)
        sources.log_joint = [np.concatenate(pair) for pair in zip(lj0, lj1)]
        log_mu = np.concatenate(
            [log_mu[keep0] + np.log(p_mu[0][keep0]), log_mu[keep1] + np.log(p_mu[1][keep1])]
        )
        bits = np.concatenate(
            [
                np.column_stack([bits[keep0], np.zeros(keep0.size, dtype=np.int8)]),
                np.column_stack([bits[keep1], np.ones(keep1.size, dtype=np.int8)]),
            ]
        )
    report.step_losses = {name: np.array(v) for name, v in losses.items()}
    if model_class is not None:
        report.h = np.array(h)
        report.s = np.array(s)
    return report


def exact_expected_loss(mu: Measure, scheme: Predictor, n: int, exact_cap: int = DEFAULT_EXACT_CAP) -> LossTrace:
    """Per-step and cumulative ``mu``-expected loss of ``scheme``."""
    return evaluate(mu, n, schemes={"scheme": scheme}, exact_cap=exact_cap).loss("scheme")


def exact_entropy(mu: Measure, model_class: ModelClass, n: int, exact_cap: int = DEFAULT_EXACT_CAP):
    """Expected per-step relative entropies and their sum ``H_n``."""
    rep = evaluate(mu, n, model_class=model_class, exact_cap=exact_cap)
    return rep.h, float(rep.H[-1])


def convergence_sum(mu: Measure, model_class: ModelClass, n: int, exact_cap: int = DEFAULT_EXACT_CAP) -> float:
    rep = evaluate(mu, n, model_class=model_class, exact_cap=exact_cap)
    return float(rep.S[-1])


def _mc_block(mu, scheme, n, seed, block, size):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    u = rng.random((size, n))
    bits = np.zeros((size, 0), dtype=np.int8)
    sources = _Sources(mu, [scheme.rho], bits)
    rows = np.arange(size)
    total = np.zeros(size)
    for t in range(1, n + 1):
        cond = sources.conditionals(bits)
        p0, p1 = cond[id(scheme.rho)]
        act = scheme.actions(t, bits, p0, p1)
        x = (u[:, t - 1] < cond[id(mu)][1]).astype(np.int8)
        total += scheme.loss.tables(t, bits)[rows, x, act]
        if t < n:
            ones = x == 1
            grown0 = sources.extend(rows, 0)
            grown1 = sources.extend(rows, 1)
            sources.log_joint = [np.where(ones[:, None], g1, g0) for g0, g1 in zip(grown0, grown1)]
            bits = np.column_stack([bits, x])
    return total


def mc_losses(mu: Measure, scheme: Predictor, n: int, samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """Realized total losses of ``samples`` sequences drawn from ``mu``.

    Sample ``i`` draws its randomness from block ``i // MC_BLOCK`` of a
    stream spawned from ``seed``, so results do not depend on ``threads``.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if n < 1:
        raise ValueError("horizon must be at least 1")
    sizes = [min(MC_BLOCK, samples - start) for start in range(0, samples, MC_BLOCK)]
    jobs = [(mu, scheme, n, seed, b, size) for b, size in enumerate(sizes)]
    if threads == 1 or len(jobs) == 1:
        parts = [_mc_block(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as pool:
            parts = list(pool.map(lambda job: _mc_block(*job), jobs))
    return np.concatenate(parts)


def mc_expected_loss(mu: Measure, scheme: Predictor, n: int, samples: int, seed: int, threads: int = 1):
    """Monte Carlo estimate of the total expected loss and its standard error."""
    totals = mc_losses(mu, scheme, n, samples, seed, threads)
    mean = math.fsum(totals) / samples
    var = math.fsum((totals - mean) ** 2) / (samples - 1)
    return mean, math.sqrt(var / samples)
