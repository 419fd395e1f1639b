"""Worker-count sizing from input bytes and per-function network burst
capacity, plus the thresholds steering physical planning choices."""

from __future__ import annotations

import math
from dataclasses import dataclass

MIB = 1024 ** 2


@dataclass(frozen=True)
class SizingModel:
    net_gbps: float = 0.63
    target_stage_seconds: float = 10.0
    max_w: int = 2500
    min_bytes_per_fragment: int = 32 * MIB
    two_level_threshold: int = 64  # W above this uses two-level invocation
    broadcast_threshold_bytes: int = 512 * MIB  # divided by W at plan time
    hot_shuffle_object_threshold: int = 4096  # partitions x producers

    @property
    def bytes_per_fragment(self) -> float:
        burst = self.net_gbps * 1e9 / 8 * self.target_stage_seconds
        return max(float(self.min_bytes_per_fragment), burst)

    def size(self, input_bytes: int) -> int:
        if input_bytes <= 0:
            return 1
        w = math.ceil(input_bytes / self.bytes_per_fragment)
        return max(1, min(self.max_w, w))
