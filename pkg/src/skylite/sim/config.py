"""Simulator configuration: shipped defaults plus a plain-text override file.

File format: one `key = value [value ...]` per line, `#` comments. Latency
keys take four values (min median tail max, in ms); price and limit keys take
the counts noted next to each default below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .faults import FaultPlan
from .latency import LatencySpec
from .pricing import PriceSheet, StoragePrices

ENV_CONFIG_VAR = "SKYLITE_CONFIG"

# Published points give min/median-or-avg/max; tail values without a published
# number are assumptions kept below the published max.
DEFAULT_LATENCIES: dict[str, LatencySpec] = {
    "lambda.cold.start": LatencySpec(122, 185, 430, 451),
    "lambda.warm.start": LatencySpec(5, 6, 8.5, 9),
    # async invoke API round trip as seen by the caller (assumed)
    "lambda.invoke.dispatch": LatencySpec(2, 8, 40, 80),
    "storage.standard.read": LatencySpec(10, 27, 1000, 2000),
    "storage.standard.write": LatencySpec(15, 40, 500, 1000),
    "storage.hot.read": LatencySpec(2, 5, 120, 240),
    "storage.hot.write": LatencySpec(3, 8, 150, 300),
    "kv.read": LatencySpec(1, 4, 100, 200),
    "kv.write": LatencySpec(2, 6, 250, 500),
    "queue.send": LatencySpec(2, 5, 50, 100),
    "queue.receive": LatencySpec(2, 5, 50, 100),
}


@dataclass(frozen=True)
class SimLimits:
    # Lambda payload and concurrency limits are assumptions (historical AWS
    # defaults), not published values.
    payload_limit_bytes: int = 256 * 1024
    admission_quota: int = 1000
    warm_keepalive_s: float = 600.0
    # deterministic worker CPU model: simulated cpu seconds =
    # calibration * bytes_touched / cpu_bytes_per_s
    cpu_calibration: float = 1.0
    cpu_bytes_per_s: float = 500e6


@dataclass(frozen=True)
class SimConfig:
    latencies: dict[str, LatencySpec] = field(
        default_factory=lambda: dict(DEFAULT_LATENCIES))
    prices: PriceSheet = field(default_factory=PriceSheet)
    limits: SimLimits = field(default_factory=SimLimits)
    fault_plan: FaultPlan = field(default_factory=FaultPlan)
    # raw key/value pairs for consumers outside the simulator (exec.*, ...)
    extra: dict[str, list[str]] = field(default_factory=dict)


def parse_config_text(text: str) -> dict[str, list[str]]:
    values: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = values'")
        key, _, rhs = line.partition("=")
        values[key.strip()] = rhs.split()
    return values


def _storage_prices(vals: list[str]) -> StoragePrices:
    read, write, tread, twrite, month = (float(v) for v in vals)
    return StoragePrices(read, write, tread, twrite, month)


def config_from_values(values: dict[str, list[str]]) -> SimConfig:
    base = SimConfig()
    latencies = dict(base.latencies)
    prices = base.prices
    limits = base.limits
    fault = base.fault_plan
    extra: dict[str, list[str]] = {}

    storage_prices = dict(prices.storage)
    price_kwargs: dict = {}
    limit_kwargs: dict = {}
    fault_kwargs: dict = {}

    for key, vals in values.items():
        if key in latencies or (key.count(".") >= 1 and len(vals) == 4
                                and key.split(".", 1)[0] in
                                ("lambda", "storage", "kv", "queue")):
            latencies[key] = LatencySpec(*(float(v) for v in vals))
        elif key == "price.compute.gib_h":
            price_kwargs["compute_gib_h_at_min_mem"] = float(vals[0])
            price_kwargs["compute_gib_h_at_max_mem"] = float(vals[1])
        elif key == "price.compute.vcpu_h":
            price_kwargs["vcpu_h_at_min_mem"] = float(vals[0])
            price_kwargs["vcpu_h_at_max_mem"] = float(vals[1])
        elif key.startswith("price.storage."):
            storage_prices[key.rsplit(".", 1)[1]] = _storage_prices(vals)
        elif key == "price.kv":
            price_kwargs["kv"] = _storage_prices(vals)
        elif key == "price.queue.per_m":
            price_kwargs["queue_cents_per_m"] = float(vals[0])
        elif key == "platform.payload_limit_kib":
            limit_kwargs["payload_limit_bytes"] = int(float(vals[0]) * 1024)
        elif key == "platform.admission_quota":
            limit_kwargs["admission_quota"] = int(vals[0])
        elif key == "platform.keepalive_s":
            limit_kwargs["warm_keepalive_s"] = float(vals[0])
        elif key == "compute.calibration":
            limit_kwargs["cpu_calibration"] = float(vals[0])
        elif key == "compute.cpu_bytes_per_s":
            limit_kwargs["cpu_bytes_per_s"] = float(vals[0])
        elif key == "fault.straggler_fraction":
            fault_kwargs["straggler_fraction"] = float(vals[0])
        elif key == "fault.straggler_slowdown":
            fault_kwargs["straggler_slowdown"] = float(vals[0])
        elif key == "fault.crash_fraction":
            fault_kwargs["crash_fraction"] = float(vals[0])
        elif key == "fault.scope":
            fault_kwargs["scope"] = vals[0]
        elif key == "fault.rng_seed":
            fault_kwargs["rng_seed"] = int(vals[0])
        else:
            extra[key] = vals

    if storage_prices != prices.storage or price_kwargs:
        prices = replace(prices, storage=storage_prices, **price_kwargs)
    if limit_kwargs:
        limits = replace(limits, **limit_kwargs)
    if fault_kwargs:
        fault = replace(fault, **fault_kwargs)
    return SimConfig(latencies=latencies, prices=prices, limits=limits,
                     fault_plan=fault, extra=extra)


def load_config(path: str | os.PathLike | None = None) -> SimConfig:
    """Load configuration from a file, $SKYLITE_CONFIG, or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_VAR)
    if path is None:
        return SimConfig()
    return config_from_values(parse_config_text(Path(path).read_text()))
