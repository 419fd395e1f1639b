"""Distributed execution: workers, coordinator, and the result registry."""

from .coordinator import Coordinator, RunResult, read_result
from .expressions import div_round_half_even, evaluate, truthy
from .hashing import fnv1a64, hash_rows, partition_rows, splitmix64
from .operators import (CollectSink, CollectWriter, ExchangeWriter,
                        OutputRecord, batch_nbytes, compile_chain)
from .registry import RegistryEntry, ResultRegistry
from .worker import WorkerRuntime, classify_error, response_queue

__all__ = [
    "Coordinator", "RunResult", "read_result",
    "div_round_half_even", "evaluate", "truthy",
    "fnv1a64", "hash_rows", "partition_rows", "splitmix64",
    "CollectSink", "CollectWriter", "ExchangeWriter", "OutputRecord",
    "batch_nbytes", "compile_chain",
    "RegistryEntry", "ResultRegistry",
    "WorkerRuntime", "classify_error", "response_queue",
]
