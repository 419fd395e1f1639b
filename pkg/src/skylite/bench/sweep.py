"""Scale-factor sweep: cold, cache-off latency of the scan-heavy queries
across dataset sizes. Because fragment counts grow with the input, total
latency should stay within a small band while data grows by orders of
magnitude."""

from __future__ import annotations

from dataclasses import dataclass

from ..engine.coordinator import Coordinator
from ..sim.config import SimConfig
from ..sim.simulator import Simulator
from .datagen import generate
from .queries import QUERIES
from .reports import accrue_storage, report

DEFAULT_SFS = (0.001, 0.01, 0.1, 1.0)
DEFAULT_QUERIES = (1, 6)


@dataclass
class SweepPoint:
    sf: float
    latency_us: int      # summed over the swept queries
    cost_cents: float
    invocations: int

    def to_json(self) -> dict:
        return {"sf": self.sf, "latency_ms": self.latency_us / 1000,
                "cost_cents": self.cost_cents,
                "invocations": self.invocations}


def sweep(sfs: tuple[float, ...] = DEFAULT_SFS,
          queries: tuple[int, ...] = DEFAULT_QUERIES, seed: int = 0,
          config: SimConfig | None = None) -> list[SweepPoint]:
    """Each point runs on a fresh deployment: cold sandboxes, empty cache."""
    points = []
    for sf in sfs:
        sim = Simulator(seed=seed, config=config)
        catalog = generate(sim, sf, seed=seed)
        coord = Coordinator(sim, catalog, use_cache=False)
        latency = 0
        cost = 0.0
        invocations = 0
        for qn in queries:
            result = coord.run(QUERIES[qn])
            rep = report(sim, result)
            latency += result.latency_us
            cost += rep.cost_cents
            invocations += result.invocations
        accrue_storage(sim)
        points.append(SweepPoint(sf, latency, cost, invocations))
    return points
