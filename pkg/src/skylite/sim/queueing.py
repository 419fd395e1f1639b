"""Simulated message queue: at-least-once, unordered delivery.

Messages become visible once the receiver's simulated clock passes the
sender's enqueue time. Delivery order is shuffled by a seeded stream, so
consumers cannot rely on FIFO behavior.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field

from ..errors import PayloadTooLarge
from .clock import SimContext
from .latency import LatencyModel
from .ledger import CostLedger
from .pricing import PriceSheet


@dataclass(frozen=True)
class QueueMessage:
    queue: str
    body: bytes
    enqueue_t_us: int
    msg_id: int


@dataclass
class _Queue:
    messages: list[QueueMessage] = field(default_factory=list)


class QueueService:
    def __init__(self, latencies: LatencyModel, ledger: CostLedger,
                 prices: PriceSheet, seed: int, lock: threading.RLock,
                 payload_limit_bytes: int):
        self._queues: dict[str, _Queue] = {}
        self._latencies = latencies
        self._ledger = ledger
        self._prices = prices
        self._rng = random.Random(seed)
        self._lock = lock
        self._payload_limit = payload_limit_bytes
        self._next_id = 0

    def _bill(self, t_us: int, note: str) -> None:
        self._ledger.add(t_us, "queue_msgs", 1,
                         self._prices.queue_cents_per_m / 1e6, note)

    def send_message(self, ctx: SimContext, queue: str, body: bytes) -> None:
        if len(body) > self._payload_limit:
            raise PayloadTooLarge(
                f"message of {len(body)} bytes exceeds {self._payload_limit}")
        ctx.advance(self._latencies.sample_us("queue.send"))
        with self._lock:
            q = self._queues.setdefault(queue, _Queue())
            q.messages.append(QueueMessage(queue, bytes(body), ctx.now_us,
                                           self._next_id))
            self._next_id += 1
        self._bill(ctx.now_us, f"send:{queue}")

    def receive_messages(self, ctx: SimContext, queue: str,
                         max_n: int) -> list[QueueMessage]:
        """Return and remove up to max_n messages visible at the caller's
        simulated time, in shuffled order."""
        ctx.advance(self._latencies.sample_us("queue.receive"))
        self._bill(ctx.now_us, f"receive:{queue}")
        with self._lock:
            q = self._queues.get(queue)
            if q is None:
                return []
            visible = [m for m in q.messages if m.enqueue_t_us <= ctx.now_us]
            self._rng.shuffle(visible)
            taken = visible[:max_n]
            taken_ids = {m.msg_id for m in taken}
            q.messages = [m for m in q.messages if m.msg_id not in taken_ids]
        return taken

    def pending(self, queue: str) -> int:
        with self._lock:
            q = self._queues.get(queue)
            return len(q.messages) if q else 0
