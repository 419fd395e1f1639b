"""Simulated time: per-agent clock cursors, a global timeline, and the event log.

All simulated time is integer microseconds. Every agent (coordinator,
worker, driver) owns a SimContext whose cursor advances as the agent incurs
latency. The global clock only tracks the maximum observed time and a wake-up
heap used to interleave concurrently running coordinators deterministically.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator

US_PER_MS = 1_000
US_PER_S = 1_000_000


def ms_to_us(ms: float) -> int:
    return int(round(ms * US_PER_MS))


def s_to_us(s: float) -> int:
    return int(round(s * US_PER_S))


@dataclass
class SimContext:
    """Local clock cursor of one simulated execution context.

    time_scale > 1 models an injected straggler: every latency the context
    incurs is stretched by the factor.
    """

    now_us: int = 0
    time_scale: float = 1.0
    label: str = ""

    def advance(self, us: int) -> int:
        if us < 0:
            raise ValueError("cannot advance time backwards")
        self.now_us += int(round(us * self.time_scale))
        return self.now_us

    def fork(self, label: str = "", time_scale: float = 1.0) -> "SimContext":
        return SimContext(now_us=self.now_us, time_scale=time_scale, label=label)


@dataclass
class SimEvent:
    t_us: int
    kind: str
    attrs: dict[str, Any] = field(default_factory=dict)


class EventLog:
    """Append-only record of everything that happened in the simulation."""

    def __init__(self) -> None:
        self._events: list[SimEvent] = []

    def record(self, t_us: int, kind: str, **attrs: Any) -> SimEvent:
        ev = SimEvent(t_us=t_us, kind=kind, attrs=attrs)
        self._events.append(ev)
        return ev

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[SimEvent]:
        return iter(self._events)

    def select(self, kind: str, **match: Any) -> list[SimEvent]:
        out = []
        for ev in self._events:
            if ev.kind != kind:
                continue
            if all(ev.attrs.get(k) == v for k, v in match.items()):
                out.append(ev)
        return out

    def timeline(self) -> list[SimEvent]:
        return sorted(self._events, key=lambda e: e.t_us)


class SimClock:
    """Global simulated clock: monotone high-water mark plus a wake-up heap.

    The heap carries pending wake-ups of cooperative processes (one per
    coordinator). Ties are broken by insertion order, so identical seeds and
    request sequences replay identically.
    """

    def __init__(self) -> None:
        self.now_us = 0
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def observe(self, t_us: int) -> None:
        if t_us > self.now_us:
            self.now_us = t_us

    def schedule(self, t_us: int, callback: Callable[[], None]) -> None:
        heapq.heappush(self._heap, (t_us, next(self._seq), callback))

    def run_until_idle(self) -> None:
        while self._heap:
            t_us, _, callback = heapq.heappop(self._heap)
            self.observe(t_us)
            callback()
