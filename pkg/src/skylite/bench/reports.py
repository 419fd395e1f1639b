"""Per-run cost and efficiency reports reconciled against the ledger."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..engine.coordinator import RunResult
from ..sim.ledger import LedgerEntry
from ..sim.pricing import GIB
from ..sim.simulator import Simulator


@dataclass
class RunReport:
    query_id: str
    cache_key: str
    latency_us: int
    invocations: int
    retriggers: int
    splits: int
    cache_hits: list[int]
    cost_cents: float
    quantity_by_category: dict[str, float] = field(default_factory=dict)
    cost_by_category: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "cache_key": self.cache_key,
            "latency_ms": self.latency_us / 1000,
            "invocations": self.invocations,
            "retriggers": self.retriggers,
            "splits": self.splits,
            "cache_hits": self.cache_hits,
            "cost_cents": self.cost_cents,
            "quantity_by_category": self.quantity_by_category,
            "cost_by_category": self.cost_by_category,
        }


def run_entries(sim: Simulator, result: RunResult) -> list[LedgerEntry]:
    """The ledger window this run appended (coordinator, workers, storage,
    queue, and registry traffic included)."""
    return sim.ledger.entries[result.ledger_mark:result.ledger_end]


def report(sim: Simulator, result: RunResult) -> RunReport:
    quantities: dict[str, float] = {}
    costs: dict[str, float] = {}
    for e in run_entries(sim, result):
        quantities[e.category] = quantities.get(e.category, 0.0) + e.quantity
        costs[e.category] = costs.get(e.category, 0.0) + e.cost_cents
    return RunReport(
        query_id=result.query_id,
        cache_key=result.cache_key,
        latency_us=result.latency_us,
        invocations=result.invocations,
        retriggers=result.retriggers,
        splits=result.splits,
        cache_hits=list(result.cache_hits),
        cost_cents=sum(costs.values()),
        quantity_by_category=quantities,
        cost_by_category=costs,
    )


def compute_cost_cents(sim: Simulator, result: RunResult) -> float:
    return sum(e.cost_cents for e in run_entries(sim, result)
               if e.category == "compute_gib_s")


def bytes_transferred(sim: Simulator, result: RunResult,
                      key_prefix: str) -> int:
    """Bytes moved to or from objects under key_prefix during the run."""
    total = 0.0
    for e in run_entries(sim, result):
        if e.category == "transfer_gib" and e.note.startswith(key_prefix):
            total += e.quantity
    return int(round(total * GIB))


def accrue_storage(sim: Simulator) -> None:
    """Charge storage rent for every live object up to the clock's
    high-water mark (call at the end of a session or sweep point)."""
    sim.store.accrue_storage(sim.clock.now_us)
