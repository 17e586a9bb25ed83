"""Bounded losses and the loss-minimizing binary action rule."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateRange
from .measures import BitsLike, Measure, _rows, all_strings, as_bits

__all__ = [
    "LossSpec",
    "PeriodicMask",
    "Threshold",
    "Predictor",
    "error_loss",
    "weather_loss",
    "optimal_action",
    "threshold_gamma",
    "rescale_loss",
    "lambda_scheme",
]

# expected-loss differences below TIE_TOL * l_delta count as ties
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PeriodicMask:
    """Zero loss on steps ``t`` whose phase ``(t - 1) % period + 1`` is masked."""

    period: int
    masked: tuple = ()

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be positive")
        masked = tuple(sorted(int(m) for m in self.masked))
        if any(not 1 <= m <= self.period for m in masked):
            raise ValueError("masked phases must lie in 1..period")
        object.__setattr__(self, "masked", masked)

    def active(self, t: int) -> bool:
        return ((t - 1) % self.period + 1) not in self.masked


@dataclass(frozen=True)
class LossSpec:
    """Loss ``l(t, history, x, y)`` with a declared range ``[l_min, l_max]``.

    The raw value comes from ``table`` (``(l00, l01, l10, l11)``, indexed
    outcome-then-action) or from ``evaluator``; ``schedule`` zeroes masked
    steps; ``scale`` and ``shift`` apply last. Construct through
    :meth:`static` or :meth:`from_evaluator`.
    """

    l_min: float
    l_max: float
    table: Optional[tuple] = None
    evaluator: Optional[Callable] = field(default=None, compare=False)
    schedule: Optional[PeriodicMask] = None
    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.table is None and self.evaluator is None:
            raise ValueError("a loss needs a table or an evaluator")
        if self.l_max < self.l_min:
            raise ValueError("l_max must not be below l_min")
        if self.table is not None:
            table = tuple(float(v) for v in np.ravel(self.table))
            if len(table) != 4:
                raise ValueError("a static loss table has four entries l00, l01, l10, l11")
            object.__setattr__(self, "table", table)
            vals = [self._post(v) for v in table]
            if self.schedule is not None and self.schedule.masked:
                vals.append(self._post(0.0))
            lo, hi = min(vals), max(vals)
            slack = 1e-12 * max(1.0, abs(self.l_min), abs(self.l_max))
            if lo < self.l_min - slack or hi > self.l_max + slack:
                raise ValueError(
                    f"loss values [{lo}, {hi}] fall outside the declared range "
                    f"[{self.l_min}, {self.l_max}]"
                )

    @classmethod
    def static(cls, table, l_min=None, l_max=None, schedule=None) -> "LossSpec":
        vals = [float(v) for v in np.ravel(table)]
        if schedule is not None and schedule.masked:
            vals.append(0.0)
        return cls(
            l_min=min(vals) if l_min is None else float(l_min),
            l_max=max(vals) if l_max is None else float(l_max),
            table=tuple(np.ravel(table)),
            schedule=schedule,
        )

    @classmethod
    def from_evaluator(cls, fn, l_min, l_max, table=None) -> "LossSpec":
        """Wrap a pure ``fn(t, history, x, y)``.

        When ``table`` is also given it must agree with ``fn``; this is
        checked on every history up to length 3.
        """
        spec = cls(l_min=float(l_min), l_max=float(l_max), table=table, evaluator=fn)
        if table is not None:
            for t in range(1, 5):
                for hist in all_strings(t - 1):
                    for x in (0, 1):
                        for y in (0, 1):
                            got = fn(t, tuple(int(b) for b in hist), x, y)
                            if not np.isclose(got, spec.table[2 * x + y], rtol=0, atol=1e-12):
                                raise ValueError("static table disagrees with evaluator")
        return spec

    @property
    def l_delta(self) -> float:
        return self.l_max - self.l_min

    @property
    def is_static(self) -> bool:
        return self.table is not None and self.schedule is None and self.evaluator is None

    def _post(self, raw):
        return self.scale * raw + self.shift

    def _raw(self, t, history, x, y) -> float:
        if self.evaluator is not None:
            return float(self.evaluator(t, history, x, y))
        return self.table[2 * x + y]

    def value(self, t: int, history: BitsLike, x: int, y: int) -> float:
        history = tuple(int(b) for b in as_bits(history))
        raw = self._raw(t, history, x, y)
        if self.schedule is not None and not self.schedule.active(t):
            raw = 0.0
        return self._post(raw)

    def tables(self, t: int, bits) -> np.ndarray:
        """``(m, 2, 2)`` loss tables ``[row, outcome, action]`` at step ``t``."""
        bits = _rows(bits)
        m = bits.shape[0]
        if self.evaluator is None:
            raw = np.broadcast_to(np.asarray(self.table).reshape(1, 2, 2), (m, 2, 2))
        else:
            raw = np.empty((m, 2, 2))
            for r, row in enumerate(bits):
                hist = tuple(int(b) for b in row)
                for x in (0, 1):
                    for y in (0, 1):
                        raw[r, x, y] = self.evaluator(t, hist, x, y)
        if self.schedule is not None and not self.schedule.active(t):
            raw = np.zeros((m, 2, 2))
        return self._post(raw)

    def affine(self, scale: float, shift: float) -> "LossSpec":
        """The loss ``scale * l + shift`` (``scale > 0``) with its mapped range."""
        if not scale > 0:
            raise ValueError("scale must be positive")
        return replace(
            self,
            scale=self.scale * scale,
            shift=self.shift * scale + shift,
            l_min=self.l_min * scale + shift,
            l_max=self.l_max * scale + shift,
        )


def error_loss() -> LossSpec:
    """0/1 prediction error."""
    return LossSpec.static((0.0, 1.0, 1.0, 0.0))


def weather_loss() -> LossSpec:
    """Outcome 0 = sunny, 1 = rainy; action 0 = sunglasses, 1 = umbrella."""
    return LossSpec.static((0.0, 0.3, 1.0, 0.1), l_min=0.0, l_max=1.0)


def _actions(p0, p1, lt, tol):
    """Vectorized argmin over actions; ties (within ``tol``) go to action 0."""
    e0 = p0 * lt[..., 0, 0] + p1 * lt[..., 1, 0]
    e1 = p0 * lt[..., 0, 1] + p1 * lt[..., 1, 1]
    return (e1 < e0 - tol).astype(np.int8)


def optimal_action(p1: float, loss: LossSpec, t: int = 1, history: BitsLike = ()) -> int:
    """Action minimizing the expected loss when the next bit is 1 w.p. ``p1``."""
    if not 0.0 <= p1 <= 1.0:
        raise ValueError(f"p1 must be a probability, got {p1}")
    lt = loss.tables(t, as_bits(history)[None, :])
    return int(_actions(np.array([1.0 - p1]), np.array([float(p1)]), lt, TIE_TOL * loss.l_delta)[0])


@dataclass(frozen=True)
class Threshold:
    """Either a cut ``gamma`` on ``p1`` or an action that is always optimal.

    ``reversed`` marks tables where action 1 is taken below the cut
    (both actions are each better on the "wrong" outcome).
    """

    gamma: Optional[float] = None
    always: Optional[int] = None
    reversed: bool = False

    def action(self, p1: float) -> int:
        if self.always is not None:
            return self.always
        return int(p1 < self.gamma) if self.reversed else int(p1 > self.gamma)


def threshold_gamma(table) -> Threshold:
    l00, l01, l10, l11 = (float(v) for v in np.ravel(table))
    a = l01 - l00
    b = l10 - l11
    if a > 0 and b > 0:
        return Threshold(gamma=a / (a + b))
    if a < 0 and b < 0:
        return Threshold(gamma=a / (a + b), reversed=True)
    if a <= 0 and b >= 0 and not (a == 0 and b == 0):
        return Threshold(always=1)
    return Threshold(always=0)


def rescale_loss(loss: LossSpec) -> LossSpec:
    """Map the loss affinely onto ``[0, 1]`` using its declared range.

    Raises :class:`DegenerateRange` for a zero-width range; the exception's
    ``zero_loss`` attribute holds the equivalent constant-zero loss.
    """
    if not loss.l_delta > 0:
        err = DegenerateRange("loss range is zero; every action is equivalent")
        err.zero_loss = loss.affine(1.0, -loss.l_min) if loss.l_delta == 0 else None
        raise err
    if loss.l_min == 0.0 and loss.l_max == 1.0:
        return loss
    scaled = loss.affine(1.0 / loss.l_delta, -loss.l_min / loss.l_delta)
    return replace(scaled, l_min=0.0, l_max=1.0)


@dataclass(frozen=True)
class Predictor:
    """The rule acting optimally for ``loss`` under the predictions of ``rho``."""

    rho: Measure
    loss: LossSpec

    def actions(self, t: int, bits, p0=None, p1=None) -> np.ndarray:
        """Actions at step ``t`` for each history row.

        ``p0``/``p1`` may be supplied when the caller already holds the
        conditionals of ``rho``.
        """
        bits = _rows(bits)
        if p1 is None:
            p0, p1 = self.rho.next_probs(bits)
        lt = self.loss.tables(t, bits)
        return _actions(p0, p1, lt, TIE_TOL * self.loss.l_delta)

    def action(self, t: int, history: BitsLike) -> int:
        return int(self.actions(t, as_bits(history)[None, :])[0])


def lambda_scheme(rho: Measure, loss: LossSpec) -> Predictor:
    return Predictor(rho, loss)
