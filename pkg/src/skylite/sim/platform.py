"""Simulated function-as-a-service platform.

Invocations are asynchronous from the caller's point of view: the caller pays
only the dispatch latency, while the invoked function runs on its own
simulated clock starting after a cold- or warm-start delay. The entrypoint
executes synchronously in host time, but all its simulated effects are
timestamped on the invocation's clock.
"""

from __future__ import annotations

import itertools
import threading
import traceback
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import PayloadTooLarge, QuotaExceeded
from .clock import EventLog, SimClock, SimContext, s_to_us
from .config import SimLimits
from .faults import FaultInjector
from .latency import LatencyModel
from .ledger import CostLedger
from .pricing import (MEMORY_MIB_MAX, MEMORY_MIB_MIN, NET_GBPS, PriceSheet,
                      vcpus_for_memory)

Entrypoint = Callable[[bytes, SimContext], None]


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    memory_mib: int = 2048

    def __post_init__(self) -> None:
        if not (MEMORY_MIB_MIN <= self.memory_mib <= MEMORY_MIB_MAX):
            raise ValueError(
                f"memory {self.memory_mib} MiB outside "
                f"[{MEMORY_MIB_MIN}, {MEMORY_MIB_MAX}]")

    @property
    def vcpus(self) -> float:
        return vcpus_for_memory(self.memory_mib)

    @property
    def net_gbps(self) -> float:
        return NET_GBPS


@dataclass
class Invocation:
    id: int
    function: str
    start_kind: str                  # cold | warm
    state: str                       # finished | failed
    submit_t_us: int
    start_t_us: int
    end_t_us: int
    parent_id: Optional[int] = None
    depth: int = 1
    error: str = ""
    payload_bytes: int = 0


class FunctionPlatform:
    def __init__(self, latencies: LatencyModel, ledger: CostLedger,
                 prices: PriceSheet, faults: FaultInjector, limits: SimLimits,
                 clock: SimClock, log: EventLog, lock: threading.RLock):
        self._latencies = latencies
        self._ledger = ledger
        self._prices = prices
        self.faults = faults
        self._limits = limits
        self._clock = clock
        self._log = log
        self._lock = lock
        self._ids = itertools.count(1)
        self.invocations: dict[int, Invocation] = {}
        # per function: sandboxes as free-at timestamps, busy intervals
        self._sandboxes: dict[str, list[int]] = {}
        self._intervals: list[tuple[int, int]] = []
        self._depths: dict[int, int] = {}

    def running_at(self, t_us: int) -> int:
        return sum(1 for (s, e) in self._intervals if s <= t_us < e)

    def _claim_sandbox(self, fn: str, t_us: int) -> bool:
        """True and claim if a warm sandbox is free within the keep-alive
        window; otherwise a cold start creates a new one."""
        keepalive_us = s_to_us(self._limits.warm_keepalive_s)
        pool = self._sandboxes.setdefault(fn, [])
        usable = [f for f in pool if f <= t_us and t_us - f <= keepalive_us]
        if not usable:
            return False
        pool.remove(max(usable))
        return True

    def invoke(self, ctx: SimContext, fn: FunctionSpec, payload: bytes,
               entrypoint: Entrypoint, parent_id: Optional[int] = None) -> int:
        if len(payload) > self._limits.payload_limit_bytes:
            raise PayloadTooLarge(
                f"payload of {len(payload)} bytes exceeds "
                f"{self._limits.payload_limit_bytes}")

        ctx.advance(self._latencies.sample_us("lambda.invoke.dispatch"))
        submit_t = ctx.now_us

        with self._lock:
            if self.running_at(submit_t) >= self._limits.admission_quota:
                raise QuotaExceeded(
                    f"{self._limits.admission_quota} concurrent invocations")

            decision = self.faults.decide("invocation")
            warm = self._claim_sandbox(fn.name, submit_t)
            start_kind = "warm" if warm else "cold"
            delay = self._latencies.sample_us(f"lambda.{start_kind}.start")
            start_t = submit_t + delay
            inv_id = next(self._ids)
            depth = 1
            if parent_id is not None:
                depth = self._depths.get(parent_id, 0) + 1
            self._depths[inv_id] = depth

        if decision.crash:
            inv = Invocation(inv_id, fn.name, start_kind, "failed", submit_t,
                             start_t, start_t, parent_id, depth,
                             error="injected crash",
                             payload_bytes=len(payload))
            self._finish(inv, bill=False)
            return inv_id

        worker_ctx = SimContext(now_us=start_t, time_scale=decision.slowdown,
                                label=f"inv-{inv_id}")
        state, error = "finished", ""
        try:
            entrypoint(payload, worker_ctx)
        except Exception:
            state = "failed"
            error = traceback.format_exc(limit=3)
        end_t = worker_ctx.now_us
        inv = Invocation(inv_id, fn.name, start_kind, state, submit_t,
                         start_t, end_t, parent_id, depth, error,
                         payload_bytes=len(payload))
        with self._lock:
            self._sandboxes.setdefault(fn.name, []).append(end_t)
        self._finish(inv, bill=True, memory_mib=fn.memory_mib)
        return inv_id

    def _finish(self, inv: Invocation, bill: bool,
                memory_mib: int = 0) -> None:
        with self._lock:
            self.invocations[inv.id] = inv
            self._intervals.append((inv.submit_t_us, inv.end_t_us))
        self._clock.observe(inv.end_t_us)
        if bill:
            duration_us = inv.end_t_us - inv.start_t_us
            gib_s = memory_mib / 1024 * duration_us / 1e6
            cost = self._prices.compute_cost_cents(memory_mib, duration_us)
            self._ledger.add(inv.end_t_us, "compute_gib_s", gib_s, cost,
                             note=inv.function)
        self._log.record(inv.submit_t_us, "invocation", id=inv.id,
                         parent_id=inv.parent_id, function=inv.function,
                         start_kind=inv.start_kind, state=inv.state,
                         depth=inv.depth, start_t_us=inv.start_t_us,
                         end_t_us=inv.end_t_us)

    def bill_compute(self, t_us: int, memory_mib: int, duration_us: int,
                     note: str) -> None:
        """Direct compute billing for long-lived agents (the coordinator)."""
        gib_s = memory_mib / 1024 * duration_us / 1e6
        cost = self._prices.compute_cost_cents(memory_mib, duration_us)
        self._ledger.add(t_us, "compute_gib_s", gib_s, cost, note=note)
