"""Latency distributions: log-normal fitted to (median, p99.9), clamped.

Published latency tables give only min / median / tail / max points per
operation, so each operation samples a log-normal whose median equals the
configured median and whose p99.9 equals the configured tail, clamped into
[min, max].
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from statistics import NormalDist

from .clock import ms_to_us

# z-score of the 99.9th percentile
_Z_TAIL = NormalDist().inv_cdf(0.999)


@dataclass(frozen=True)
class LatencySpec:
    min_ms: float
    median_ms: float
    tail_ms: float
    max_ms: float

    def __post_init__(self) -> None:
        if not (self.min_ms <= self.median_ms <= self.tail_ms <= self.max_ms):
            raise ValueError(f"latency points must be ordered: {self}")

    @property
    def mu(self) -> float:
        return math.log(self.median_ms)

    @property
    def sigma(self) -> float:
        if self.tail_ms == self.median_ms:
            return 0.0
        return (math.log(self.tail_ms) - math.log(self.median_ms)) / _Z_TAIL


class LatencyModel:
    """Named latency distributions sharing one seeded RNG stream."""

    def __init__(self, specs: dict[str, LatencySpec], seed: int):
        self._specs = dict(specs)
        self._rng = random.Random(seed)

    def spec(self, key: str) -> LatencySpec:
        try:
            return self._specs[key]
        except KeyError:
            raise KeyError(f"no latency spec configured for {key!r}") from None

    def sample_ms(self, key: str) -> float:
        spec = self.spec(key)
        if spec.sigma == 0.0:
            return spec.median_ms
        value = self._rng.lognormvariate(spec.mu, spec.sigma)
        return min(max(value, spec.min_ms), spec.max_ms)

    def sample_us(self, key: str) -> int:
        return ms_to_us(self.sample_ms(key))
