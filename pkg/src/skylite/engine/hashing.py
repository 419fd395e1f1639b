"""Stable row hashing for exchange partitioning. Deliberately independent
of Python's randomized hash() so partition assignment is reproducible
across processes and runs."""

from __future__ import annotations

import numpy as np

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def splitmix64(values: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over int64/uint64 values."""
    with np.errstate(over="ignore"):
        z = values.astype(np.uint64) + _SPLITMIX_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    h = _FNV_OFFSET
    for b in text.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


def hash_column(values: np.ndarray) -> np.ndarray:
    if values.dtype == object:
        return np.fromiter((fnv1a64(v) for v in values), dtype=np.uint64,
                           count=len(values))
    if values.dtype == np.bool_:
        return splitmix64(values.astype(np.int64))
    return splitmix64(values)


def hash_rows(columns: list[np.ndarray]) -> np.ndarray:
    """Combined hash of one or more key columns."""
    combined = None
    with np.errstate(over="ignore"):
        for col in columns:
            h = hash_column(col)
            if combined is None:
                combined = h
            else:
                combined = splitmix64(combined * np.uint64(31) + h)
    if combined is None:
        raise ValueError("hash_rows requires at least one column")
    return combined


def partition_rows(columns: list[np.ndarray],
                   partition_count: int) -> np.ndarray:
    if partition_count == 1:
        return np.zeros(len(columns[0]) if columns else 0, dtype=np.int64)
    return (hash_rows(columns) % np.uint64(partition_count)).astype(np.int64)
