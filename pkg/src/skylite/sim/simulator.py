"""Facade wiring the simulated platform, storage, queue, and accounting."""

from __future__ import annotations

import hashlib
import threading
from typing import Optional

from .clock import EventLog, SimClock, SimContext
from .config import SimConfig
from .faults import FaultInjector, FaultPlan
from .latency import LatencyModel
from .ledger import CostLedger
from .platform import FunctionPlatform
from .queueing import QueueService
from .storage import KVStore, ObjectStore


def _child_seed(root_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{root_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class Simulator:
    """One deterministic simulated deployment: compute platform, object
    store, key-value store, message queues, ledger, and event log."""

    def __init__(self, seed: int = 0, config: Optional[SimConfig] = None):
        self.seed = seed
        self.config = config or SimConfig()
        self.clock = SimClock()
        self.log = EventLog()
        self.ledger = CostLedger()
        self._lock = threading.RLock()
        self.latencies = LatencyModel(self.config.latencies,
                                      _child_seed(seed, "latency"))
        self.faults = FaultInjector(self.config.fault_plan)
        self.store = ObjectStore(self.latencies, self.ledger,
                                 self.config.prices, self.faults, self._lock)
        self.kv = KVStore(self.latencies, self.ledger, self.config.prices,
                          self._lock)
        self.queues = QueueService(self.latencies, self.ledger,
                                   self.config.prices,
                                   _child_seed(seed, "queue"), self._lock,
                                   self.config.limits.payload_limit_bytes)
        self.platform = FunctionPlatform(self.latencies, self.ledger,
                                         self.config.prices, self.faults,
                                         self.config.limits, self.clock,
                                         self.log, self._lock)

    def new_context(self, label: str = "") -> SimContext:
        return SimContext(now_us=self.clock.now_us, label=label)

    def set_fault_plan(self, plan: Optional[FaultPlan]) -> None:
        """Swap the active fault plan (fresh injector stream)."""
        injector = FaultInjector(plan)
        self.faults = injector
        self.store.faults = injector
        self.platform.faults = injector

    @property
    def limits(self):
        return self.config.limits

    @property
    def prices(self):
        return self.config.prices
