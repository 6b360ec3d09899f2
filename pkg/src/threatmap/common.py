"""Shared primitives: inclusive date ranges and a seeded, portable RNG stream."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime


class PipelineError(Exception):
    """Base class for every error raised by a pipeline stage."""


class InvalidRange(PipelineError):
    """Raised when a date interval is empty or inverted."""


@dataclass(frozen=True)
class DateRange:
    """Inclusive calendar-day interval (both endpoint days belong to it)."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise InvalidRange(f"empty date range: {self.start} > {self.end}")

    def contains(self, ts: date | datetime) -> bool:
        d = ts.date() if isinstance(ts, datetime) else ts
        return self.start <= d <= self.end

    def intersect(self, other: "DateRange") -> "DateRange | None":
        lo = max(self.start, other.start)
        hi = min(self.end, other.end)
        return DateRange(lo, hi) if lo <= hi else None

    @property
    def day_count(self) -> int:
        return (self.end - self.start).days + 1


# Observation span of the activity logs this pipeline is built around.
DEFAULT_OBSERVATION_RANGE = DateRange(date(2010, 1, 1), date(2011, 5, 31))

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit splitmix PRNG.

    Every seed-driven selection in the pipeline (class balancing, split
    shuffles, synthetic event placement) draws from this stream so that
    artifacts are byte-identical across platforms and library versions.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_uint64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n); rejection sampling keeps it unbiased."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_uint64()
            if v < limit:
                return v % n

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items, k: int) -> list:
        """k distinct elements, selected without replacement."""
        pool = list(items)
        if not 0 <= k <= len(pool):
            raise ValueError(f"cannot sample {k} of {len(pool)} items")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def poisson(self, lam: float) -> int:
        """Poisson-distributed count (Knuth's product method; small lam only)."""
        if lam < 0:
            raise ValueError("rate must be non-negative")
        threshold = math.exp(-lam)
        k = 0
        p = self.random()
        while p > threshold:
            k += 1
            p *= self.random()
        return k

    def spawn(self) -> "SplitMix64":
        """Child generator with a state drawn from this stream."""
        return SplitMix64(self.next_uint64())
