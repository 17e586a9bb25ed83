"""Repeated binary bets: profit framing, profit guarantees and winning-zone horizons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import SLACK_TOL
from .decision import LossSpec, Predictor
from .evaluate import DEFAULT_EXACT_CAP, evaluate
from .exceptions import InvalidRange, NonPositiveEdge
from .measures import Measure
from .mixture import ModelClass

__all__ = [
    "GameSpec",
    "GameReport",
    "profit_lower_bound",
    "winning_zone_threshold",
    "time_to_win_threshold",
    "profit_gap_envelope",
    "run_game",
    "game_reports",
    "average_profit_gap",
]


def profit_lower_bound(P_mu: float, H: float, n: int, p_max: float, p_delta: float) -> float:
    """Guaranteed total expected profit of the universal bettor."""
    H = max(0.0, H)
    head = n * p_max - P_mu
    if head < -1e-12 * max(1.0, abs(n * p_max)):
        raise InvalidRange(f"P_mu={P_mu} exceeds n*p_max={n * p_max}")
    head = max(0.0, head)
    return P_mu - p_delta * H - math.sqrt(4.0 * head * p_delta * H + (p_delta * H) ** 2)


def winning_zone_threshold(p_bar_mu: float, p_max: float, p_delta: float, H: float) -> float:
    """Horizon beyond which the profit guarantee turns positive."""
    if not p_bar_mu > 0:
        raise NonPositiveEdge("no winning strategy exists when the informed average profit is <= 0")
    return 2.0 * p_delta * (2.0 * p_max - p_bar_mu) / p_bar_mu**2 * H


def time_to_win_threshold(p_bar_mu: float, p_delta: float, d_mu: float) -> float:
    """Simpler sufficient horizon ``(2 p_delta / p_bar_mu)^2 d_mu``."""
    if not p_bar_mu > 0:
        raise NonPositiveEdge("no winning strategy exists when the informed average profit is <= 0")
    return (2.0 * p_delta / p_bar_mu) ** 2 * d_mu


def profit_gap_envelope(n: int, p_delta: float, p_max: float, d_mu: float) -> float:
    """Upper envelope on ``pbar_mu - pbar_xi`` at horizon ``n``.

    Leading ``sqrt(4 p_delta p_max d_mu / n)`` term plus the ``p_delta d_mu / n``
    correction.
    """
    return math.sqrt(4.0 * p_delta * max(p_max, 0.0) * d_mu / n) + p_delta * d_mu / n


@dataclass(frozen=True)
class GameSpec:
    """A binary betting game.

    ``profit`` is ``(p00, p01, p10, p11)``, outcome then action. ``p_max``
    and ``p_delta`` default to the table's extremes.
    """

    mu: Measure
    model_class: ModelClass
    profit: tuple
    n: int
    p_max: Optional[float] = None
    p_delta: Optional[float] = None
    exact_cap: int = DEFAULT_EXACT_CAP

    def __post_init__(self):
        table = tuple(float(v) for v in np.ravel(self.profit))
        if len(table) != 4:
            raise ValueError("profit table needs four entries p00, p01, p10, p11")
        p_max = max(table) if self.p_max is None else float(self.p_max)
        p_delta = p_max - min(table) if self.p_delta is None else float(self.p_delta)
        if p_delta < 0:
            raise ValueError("profit range must be nonnegative")
        tol = 1e-12 * max(1.0, abs(p_max), p_delta)
        if max(table) > p_max + tol or min(table) < p_max - p_delta - tol:
            raise ValueError(
                f"profit table {table} falls outside [{p_max - p_delta}, {p_max}]"
            )
        object.__setattr__(self, "profit", table)
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "p_delta", p_delta)

    @property
    def loss(self) -> LossSpec:
        """Negative profit, with the range implied by ``p_max`` and ``p_delta``."""
        return LossSpec.static(
            tuple(-p for p in self.profit),
            l_min=-self.p_max,
            l_max=-self.p_max + self.p_delta,
        )


@dataclass(frozen=True)
class GameReport:
    n: int
    P_xi: float
    P_mu: float
    H_n: float
    d_mu: float
    eq12_bound: float
    eq13_threshold: float
    thm_ii_threshold: float

    @property
    def pbar_xi(self) -> float:
        return self.P_xi / self.n

    @property
    def pbar_mu(self) -> float:
        return self.P_mu / self.n

    @property
    def in_winning_zone(self) -> bool:
        return self.n > self.eq13_threshold

    @property
    def past_time_to_win(self) -> bool:
        return self.n > self.thm_ii_threshold

    @property
    def eq12_holds(self) -> bool:
        return self.P_xi >= self.eq12_bound - SLACK_TOL

    @property
    def thm_ii_holds(self) -> bool:
        """Past the time-to-win horizon with a positive edge, the universal bettor wins."""
        if self.pbar_mu > 0 and self.past_time_to_win:
            return self.pbar_xi > 0
        return True

    def csv_row(self):
        return (
            self.n, self.P_xi, self.P_mu, self.pbar_xi, self.pbar_mu, self.H_n,
            self.eq12_bound, self.eq13_threshold, self.thm_ii_threshold, self.in_winning_zone,
        )


def game_reports(spec: GameSpec, horizons: Optional[Sequence[int]] = None) -> list:
    """Reports for each horizon (default ``1..spec.n``) from one enumeration."""
    horizons = list(range(1, spec.n + 1)) if horizons is None else sorted(set(horizons))
    top = max(horizons)
    loss = spec.loss
    schemes = {"xi": Predictor(spec.model_class, loss), "mu": Predictor(spec.mu, loss)}
    rep = evaluate(spec.mu, top, spec.model_class, schemes, spec.exact_cap)
    H = rep.H
    out = []
    for n in horizons:
        # profits are negated losses along the same accumulation path
        P_xi, P_mu = -rep.L("xi", n), -rep.L("mu", n)
        H_n = float(H[n - 1])
        pbar_mu = P_mu / n
        if pbar_mu > 0:
            eq13 = winning_zone_threshold(pbar_mu, spec.p_max, spec.p_delta, H_n)
            thm_ii = time_to_win_threshold(pbar_mu, spec.p_delta, rep.d_mu)
        else:
            eq13 = thm_ii = math.inf
        out.append(
            GameReport(
                n=n, P_xi=P_xi, P_mu=P_mu, H_n=H_n, d_mu=rep.d_mu,
                eq12_bound=profit_lower_bound(P_mu, H_n, n, spec.p_max, spec.p_delta),
                eq13_threshold=eq13, thm_ii_threshold=thm_ii,
            )
        )
    return out


def run_game(spec: GameSpec) -> GameReport:
    return game_reports(spec, [spec.n])[0]


def average_profit_gap(spec: GameSpec, horizons: Sequence[int]) -> list:
    """``(n, pbar_mu - pbar_xi)`` pairs."""
    return [(r.n, r.pbar_mu - r.pbar_xi) for r in game_reports(spec, horizons)]
