"""Simulated serverless object storage (two classes) and a key-value store.

Effects apply immediately (read-after-write); latencies advance the calling
context's simulated clock. Transfer time is modeled at the per-function
network bandwidth on top of the sampled request latency.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from ..errors import NoSuchKey, RangeUnsatisfiable, RequestFailed
from .clock import SimContext, US_PER_S
from .faults import FaultInjector
from .latency import LatencyModel
from .ledger import CostLedger
from .pricing import GIB, MONTH_S, NET_GBPS, PriceSheet

STORAGE_CLASSES = ("standard", "hot")
TAIL = -1  # length sentinel meaning "to end of object"


def transfer_us(nbytes: int, gbps: float = NET_GBPS) -> int:
    return int(round(nbytes * 8 / (gbps * 1e9) * US_PER_S))


@dataclass
class StoredObject:
    bucket: str
    key: str
    data: bytes
    storage_class: str
    created_at_us: int
    accrued_to_us: int = 0

    def __post_init__(self) -> None:
        if self.accrued_to_us == 0:
            self.accrued_to_us = self.created_at_us

    @property
    def size(self) -> int:
        return len(self.data)


class ObjectStore:
    def __init__(self, latencies: LatencyModel, ledger: CostLedger,
                 prices: PriceSheet, faults: FaultInjector,
                 lock: threading.RLock):
        self._objects: dict[tuple[str, str], StoredObject] = {}
        self._latencies = latencies
        self._ledger = ledger
        self._prices = prices
        self.faults = faults
        self._lock = lock

    # -- billing helpers shared with the range-fetching input handler --

    def bill_request(self, t_us: int, storage_class: str, op: str,
                     count: int = 1, note: str = "") -> None:
        p = self._prices.storage_prices(storage_class)
        per_m = p.read_cents_per_m if op == "read" else p.write_cents_per_m
        category = "requests_read" if op == "read" else "requests_write"
        self._ledger.add(t_us, category, count, count * per_m / 1e6, note)

    def bill_transfer(self, t_us: int, storage_class: str, op: str,
                      nbytes: int, note: str = "") -> None:
        p = self._prices.storage_prices(storage_class)
        per_gib = (p.transfer_read_cents_per_gib if op == "read"
                   else p.transfer_write_cents_per_gib)
        gib = nbytes / GIB
        self._ledger.add(t_us, "transfer_gib", gib, gib * per_gib, note)

    def sample_latency_us(self, storage_class: str, op: str) -> int:
        return self._latencies.sample_us(f"storage.{storage_class}.{op}")

    def read_raw(self, bucket: str, key: str, offset: int,
                 length: int) -> bytes:
        """Byte slice without latency or billing (used by the input handler,
        which does its own request scheduling and billing)."""
        with self._lock:
            obj = self._objects.get((bucket, key))
        if obj is None:
            raise NoSuchKey(f"{bucket}/{key}")
        if length == TAIL:
            length = obj.size - offset
        if offset < 0 or length < 0 or offset + length > obj.size:
            raise RangeUnsatisfiable(
                f"range ({offset}, {length}) outside object of {obj.size} bytes")
        return obj.data[offset:offset + length]

    def object_size(self, bucket: str, key: str) -> int:
        with self._lock:
            obj = self._objects.get((bucket, key))
        if obj is None:
            raise NoSuchKey(f"{bucket}/{key}")
        return obj.size

    def storage_class_of(self, bucket: str, key: str) -> str:
        with self._lock:
            obj = self._objects.get((bucket, key))
        if obj is None:
            raise NoSuchKey(f"{bucket}/{key}")
        return obj.storage_class

    def exists(self, bucket: str, key: str) -> bool:
        with self._lock:
            return (bucket, key) in self._objects

    # -- public operations --

    def put_object(self, ctx: SimContext, bucket: str, key: str, data: bytes,
                   storage_class: str = "standard") -> StoredObject:
        if storage_class not in STORAGE_CLASSES:
            raise ValueError(f"unknown storage class {storage_class!r}")
        decision = self.faults.decide("storage_request")
        latency = self.sample_latency_us(storage_class, "write")
        latency = int(round(latency * decision.slowdown))
        ctx.advance(latency + transfer_us(len(data)))
        self.bill_request(ctx.now_us, storage_class, "write", note=key)
        self.bill_transfer(ctx.now_us, storage_class, "write", len(data),
                           note=key)
        if decision.crash:
            raise RequestFailed(f"injected put failure for {bucket}/{key}")
        with self._lock:
            old = self._objects.get((bucket, key))
            if old is not None:
                self._accrue_object(old, ctx.now_us)
            self._objects[(bucket, key)] = StoredObject(
                bucket, key, bytes(data), storage_class, ctx.now_us)
            return self._objects[(bucket, key)]

    def get_object_range(self, ctx: SimContext, bucket: str, key: str,
                         offset: int = 0, length: int = TAIL) -> bytes:
        decision = self.faults.decide("storage_request")
        with self._lock:
            obj = self._objects.get((bucket, key))
        if obj is None:
            # a failed lookup is still a billed request
            latency = self.sample_latency_us("standard", "read")
            ctx.advance(int(round(latency * decision.slowdown)))
            self.bill_request(ctx.now_us, "standard", "read", note=key)
            raise NoSuchKey(f"{bucket}/{key}")
        data = self.read_raw(bucket, key, offset, length)
        latency = self.sample_latency_us(obj.storage_class, "read")
        ctx.advance(int(round(latency * decision.slowdown))
                    + transfer_us(len(data)))
        self.bill_request(ctx.now_us, obj.storage_class, "read", note=key)
        self.bill_transfer(ctx.now_us, obj.storage_class, "read", len(data),
                           note=key)
        if decision.crash:
            raise RequestFailed(f"injected get failure for {bucket}/{key}")
        return data

    def list_objects(self, ctx: SimContext, bucket: str,
                     prefix: str = "") -> list[str]:
        with self._lock:
            keys = sorted(k for (b, k) in self._objects
                          if b == bucket and k.startswith(prefix))
        ctx.advance(self.sample_latency_us("standard", "read"))
        # one billed request per 1,000 returned keys, minimum one per call
        requests = max(1, math.ceil(len(keys) / 1000))
        self.bill_request(ctx.now_us, "standard", "read", count=requests,
                          note=f"list:{prefix}")
        return keys

    def delete_object(self, ctx: SimContext, bucket: str, key: str) -> None:
        ctx.advance(self.sample_latency_us("standard", "write"))
        with self._lock:
            obj = self._objects.pop((bucket, key), None)
        if obj is None:
            raise NoSuchKey(f"{bucket}/{key}")
        self._accrue_object(obj, ctx.now_us)
        self.bill_request(ctx.now_us, obj.storage_class, "write",
                          note=f"delete:{key}")

    # -- storage rent --

    def _accrue_object(self, obj: StoredObject, t_us: int) -> None:
        dt_s = max(0, t_us - obj.accrued_to_us) / US_PER_S
        if dt_s <= 0:
            return
        p = self._prices.storage_prices(obj.storage_class)
        gib_mo = obj.size / GIB * dt_s / MONTH_S
        self._ledger.add(t_us, "storage_gib_mo", gib_mo,
                         gib_mo * p.storage_cents_per_gib_mo, note=obj.key)
        obj.accrued_to_us = t_us

    def accrue_storage(self, t_us: int) -> None:
        """Append storage-rent entries covering each object up to t_us."""
        with self._lock:
            for obj in self._objects.values():
                self._accrue_object(obj, t_us)

    # -- persistence / inspection --

    def objects(self) -> list[StoredObject]:
        with self._lock:
            return list(self._objects.values())

    def load_raw(self, bucket: str, key: str, data: bytes,
                 storage_class: str, created_at_us: int = 0) -> None:
        """Install an object without latency or billing (workspace restore)."""
        with self._lock:
            self._objects[(bucket, key)] = StoredObject(
                bucket, key, data, storage_class, created_at_us)


class KVStore:
    """Single-key read/write store in the DynamoDB role (result registry)."""

    def __init__(self, latencies: LatencyModel, ledger: CostLedger,
                 prices: PriceSheet, lock: threading.RLock):
        self._items: dict[str, bytes] = {}
        self._latencies = latencies
        self._ledger = ledger
        self._prices = prices
        self._lock = lock

    def get(self, ctx: SimContext, key: str) -> Optional[bytes]:
        ctx.advance(self._latencies.sample_us("kv.read"))
        self._ledger.add(ctx.now_us, "requests_read", 1,
                         self._prices.kv.read_cents_per_m / 1e6, f"kv:{key}")
        with self._lock:
            return self._items.get(key)

    def put(self, ctx: SimContext, key: str, value: bytes) -> None:
        ctx.advance(self._latencies.sample_us("kv.write"))
        self._ledger.add(ctx.now_us, "requests_write", 1,
                         self._prices.kv.write_cents_per_m / 1e6, f"kv:{key}")
        with self._lock:
            self._items[key] = bytes(value)

    def scan_keys(self, prefix: str = "") -> list[str]:
        with self._lock:
            return sorted(k for k in self._items if k.startswith(prefix))

    def delete_prefix(self, prefix: str) -> int:
        with self._lock:
            doomed = [k for k in self._items if k.startswith(prefix)]
            for k in doomed:
                del self._items[k]
        return len(doomed)

    def items_raw(self) -> dict[str, bytes]:
        with self._lock:
            return dict(self._items)

    def load_raw(self, items: dict[str, bytes]) -> None:
        with self._lock:
            self._items.update(items)
