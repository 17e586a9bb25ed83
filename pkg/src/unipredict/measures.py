"""Probability measures on binary sequences.

Every measure exposes two vectorized kernels that the enumeration and
sampling engines use:

* ``log_prob_batch(bits)`` -- log probability of each row of an ``(m, t)``
  0/1 array, ``-inf`` marking an exact zero;
* ``next_probs(bits)`` -- the pair ``(p0, p1)`` of one-step conditionals
  for each row.

``next_probs`` is total: it returns the model's continuation rule even on
rows the model itself gives probability zero. The scalar helpers
(:func:`measure_prob`, :func:`conditional_prob`) are the checked entry
points and refuse to condition on null prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence, Union

import numpy as np

from .exceptions import UndefinedConditional

BitsLike = Union[str, Sequence[int], np.ndarray]

__all__ = [
    "Measure",
    "BernoulliIID",
    "MarkovBinary",
    "DeterministicSeq",
    "as_bits",
    "all_strings",
    "measure_prob",
    "conditional_prob",
]


def as_bits(x: BitsLike) -> np.ndarray:
    """Coerce a '0101' string or integer sequence into a 1-D int8 array."""
    if isinstance(x, str):
        if any(c not in "01" for c in x):
            raise ValueError(f"binary string may only contain '0'/'1': {x!r}")
        return np.frombuffer(x.encode(), dtype=np.uint8).astype(np.int8) - ord("0")
    arr = np.asarray(x)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int8)
    if arr.ndim != 1:
        raise ValueError("a binary string must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("binary string entries must be 0 or 1")
    return arr.astype(np.int8)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def all_strings(n: int) -> np.ndarray:
    """All ``2**n`` binary strings of length ``n`` in lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return np.array(list(product((0, 1), repeat=n)), dtype=np.int8)


def _rows(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int8)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def _safe_log(p):
    with np.errstate(divide="ignore"):
        return np.log(p)


class Measure:
    """Base class; subclasses implement the two vectorized kernels."""

    def log_prob_batch(self, bits) -> np.ndarray:
        raise NotImplementedError

    def next_probs(self, bits) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    # scalar conveniences

    def log_prob(self, x: BitsLike) -> float:
        return float(self.log_prob_batch(as_bits(x)[None, :])[0])

    def prob(self, x: BitsLike) -> float:
        return float(np.exp(self.log_prob(x)))

    def is_null(self, x: BitsLike) -> bool:
        return self.log_prob(x) == -np.inf

    def conditional(self, prefix: BitsLike, bit: int) -> float:
        prefix = as_bits(prefix)
        if self.is_null(prefix):
            raise UndefinedConditional(
                f"prefix {bits_to_str(prefix)!r} has probability zero under {self!r}"
            )
        p0, p1 = self.next_probs(prefix[None, :])
        return float(p1[0] if bit else p0[0])


@dataclass(frozen=True)
class BernoulliIID(Measure):
    """Independent bits, each equal to 1 with probability ``theta``."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")

    def log_prob_batch(self, bits):
        bits = _rows(bits)
        n1 = bits.sum(axis=1)
        n0 = bits.shape[1] - n1
        # 0 * log(0) counts as 0
        out = np.zeros(bits.shape[0])
        if self.theta > 0:
            out += n1 * np.log(self.theta)
        else:
            out[n1 > 0] = -np.inf
        if self.theta < 1:
            out += n0 * np.log1p(-self.theta)
        else:
            out[n0 > 0] = -np.inf
        return out

    def next_probs(self, bits):
        m = _rows(bits).shape[0]
        return np.full(m, 1.0 - self.theta), np.full(m, float(self.theta))


@dataclass(frozen=True)
class DeterministicSeq(Measure):
    """Point mass on ``head`` followed by ``cycle`` repeated forever."""

    head: tuple = ()
    cycle: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(b) for b in as_bits(self.head)))
        object.__setattr__(self, "cycle", tuple(int(b) for b in as_bits(self.cycle)))
        if not self.cycle:
            raise ValueError("cycle must be nonempty")

    def bit_at(self, pos: int) -> int:
        """Symbol at 0-based position ``pos`` of the supported sequence."""
        if pos < len(self.head):
            return self.head[pos]
        return self.cycle[(pos - len(self.head)) % len(self.cycle)]

    def sequence(self, n: int) -> np.ndarray:
        return np.array([self.bit_at(i) for i in range(n)], dtype=np.int8)

    def log_prob_batch(self, bits):
        bits = _rows(bits)
        target = self.sequence(bits.shape[1])
        match = np.all(bits == target, axis=1)
        return np.where(match, 0.0, -np.inf)

    def next_probs(self, bits):
        bits = _rows(bits)
        p1 = float(self.bit_at(bits.shape[1]))
        m = bits.shape[0]
        return np.full(m, 1.0 - p1), np.full(m, p1)

    def __repr__(self):
        return f"DeterministicSeq(head={bits_to_str(self.head)!r}, cycle={bits_to_str(self.cycle)!r})"


@dataclass(frozen=True)
class MarkovBinary(Measure):
    """Order-``k`` binary Markov chain.

    ``table[c]`` is the probability that the next bit is 1 after the
    length-``k`` context whose binary value is ``c`` (oldest bit most
    significant). ``initial`` is a distribution over the first ``k`` bits
    indexed the same way; uniform when omitted.
    """

    order: int
    table: tuple
    initial: tuple | None = None
    _marginals: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = int(self.order)
        if k < 1:
            raise ValueError("Markov order must be at least 1")
        table = tuple(float(p) for p in self.table)
        if len(table) != 2**k:
            raise ValueError(f"order-{k} table needs {2**k} entries, got {len(table)}")
        if any(not 0.0 <= p <= 1.0 for p in table):
            raise ValueError("table entries must be probabilities")
        if self.initial is None:
            init = np.full(2**k, 2.0**-k)
        else:
            init = np.asarray(self.initial, dtype=float)
            if init.shape != (2**k,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-12:
                raise ValueError(f"initial must be a distribution over {2**k} strings")
        object.__setattr__(self, "order", k)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "initial", None if self.initial is None else tuple(init))
        # marginals[j][p]: probability that the first j bits spell p
        margs = [init]
        for _ in range(k):
            margs.append(margs[-1].reshape(-1, 2).sum(axis=1))
        object.__setattr__(self, "_marginals", tuple(reversed(margs)))

    @staticmethod
    def _ints(cols: np.ndarray) -> np.ndarray:
        if cols.shape[1] == 0:
            return np.zeros(cols.shape[0], dtype=np.int64)
        weights = 1 << np.arange(cols.shape[1] - 1, -1, -1, dtype=np.int64)
        return cols.astype(np.int64) @ weights

    def log_prob_batch(self, bits):
        bits = _rows(bits)
        t, k = bits.shape[1], self.order
        j = min(t, k)
        out = _safe_log(self._marginals[j][self._ints(bits[:, :j])])
        theta = np.asarray(self.table)
        for s in range(k, t):
            p1 = theta[self._ints(bits[:, s - k:s])]
            out = out + _safe_log(np.where(bits[:, s] == 1, p1, 1.0 - p1))
        return out

    def next_probs(self, bits):
        bits = _rows(bits)
        t, k = bits.shape[1], self.order
        if t >= k:
            p1 = np.asarray(self.table)[self._ints(bits[:, t - k:])]
        else:
            idx = self._ints(bits)
            denom = self._marginals[t][idx]
            num = self._marginals[t + 1][2 * idx + 1]
            with np.errstate(invalid="ignore", divide="ignore"):
                p1 = np.where(denom > 0, num / denom, 0.5)
        return 1.0 - p1, p1


def measure_prob(m: Measure, x: BitsLike) -> float:
    """Probability that a sequence drawn from ``m`` starts with ``x``."""
    return m.prob(x)


def conditional_prob(m: Measure, prefix: BitsLike, bit: int) -> float:
    """One-step conditional ``m(bit | prefix)``; raises on null prefixes."""
    return m.conditional(prefix, bit)
