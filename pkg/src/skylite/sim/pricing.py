"""Unit prices for simulated compute, storage, key-value, and queue services.

Defaults reproduce the published AWS price points: Lambda memory at
3.84-4.80 cents/GiB-h (cheapest at the largest size), S3 Standard requests at
40/500 cents per million (read/write), S3 Express at 20/250 with 0.15/0.8
cents/GiB transfer, and DynamoDB-style key-value at 25/125.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .clock import US_PER_S

GIB = 1024 ** 3
MONTH_S = 30 * 24 * 3600

MEMORY_MIB_MIN = 128
MEMORY_MIB_MAX = 10240
VCPU_MIN = 0.07
VCPU_MAX = 5.79
NET_GBPS = 0.63


@dataclass(frozen=True)
class StoragePrices:
    read_cents_per_m: float
    write_cents_per_m: float
    transfer_read_cents_per_gib: float
    transfer_write_cents_per_gib: float
    storage_cents_per_gib_mo: float


@dataclass(frozen=True)
class PriceSheet:
    # compute (cents per GiB-hour of function memory); the cheapest rate
    # applies to the largest configurable size, the highest to the smallest
    compute_gib_h_at_min_mem: float = 4.80
    compute_gib_h_at_max_mem: float = 3.84
    vcpu_h_at_min_mem: float = 8.49
    vcpu_h_at_max_mem: float = 6.79
    storage: dict = field(default_factory=lambda: {
        "standard": StoragePrices(40.0, 500.0, 0.0, 0.0, 2.3),
        "hot": StoragePrices(20.0, 250.0, 0.15, 0.8, 16.0),
    })
    kv: StoragePrices = StoragePrices(25.0, 125.0, 0.0, 0.0, 25.0)
    queue_cents_per_m: float = 40.0

    def storage_prices(self, storage_class: str) -> StoragePrices:
        try:
            return self.storage[storage_class]
        except KeyError:
            raise KeyError(f"unknown storage class {storage_class!r}") from None

    def compute_gib_h(self, memory_mib: int) -> float:
        """Linear interpolation of the GiB-hour rate over the memory range."""
        if not (MEMORY_MIB_MIN <= memory_mib <= MEMORY_MIB_MAX):
            raise ValueError(f"memory {memory_mib} MiB outside "
                             f"[{MEMORY_MIB_MIN}, {MEMORY_MIB_MAX}]")
        frac = (memory_mib - MEMORY_MIB_MIN) / (MEMORY_MIB_MAX - MEMORY_MIB_MIN)
        lo, hi = self.compute_gib_h_at_max_mem, self.compute_gib_h_at_min_mem
        return hi + frac * (lo - hi)

    def compute_cost_cents(self, memory_mib: int, duration_us: int) -> float:
        gib = memory_mib / 1024
        seconds = duration_us / US_PER_S
        return gib * seconds * self.compute_gib_h(memory_mib) / 3600


def vcpus_for_memory(memory_mib: int) -> float:
    """Memory-proportional vCPU fraction over the configurable range."""
    frac = (memory_mib - MEMORY_MIB_MIN) / (MEMORY_MIB_MAX - MEMORY_MIB_MIN)
    return VCPU_MIN + frac * (VCPU_MAX - VCPU_MIN)
