"""Fault and straggler injection for invocations and storage requests.

The injector draws from its own seeded RNG stream, so a plan with all
probabilities at zero leaves the latency stream untouched and the timeline
identical to a run without any plan.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

SCOPES = ("invocation", "storage_request", "both")


@dataclass(frozen=True)
class FaultPlan:
    straggler_fraction: float = 0.0
    straggler_slowdown: float = 1.0
    crash_fraction: float = 0.0
    scope: str = "invocation"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.straggler_fraction <= 1.0:
            raise ValueError("straggler_fraction must be in [0, 1]")
        if not 0.0 <= self.crash_fraction <= 1.0:
            raise ValueError("crash_fraction must be in [0, 1]")
        if self.straggler_slowdown < 1.0:
            raise ValueError("straggler_slowdown must be >= 1")
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")

    @property
    def is_neutral(self) -> bool:
        return (self.crash_fraction == 0.0
                and (self.straggler_fraction == 0.0
                     or self.straggler_slowdown == 1.0))


@dataclass(frozen=True)
class FaultDecision:
    crash: bool
    slowdown: float


NO_FAULT = FaultDecision(crash=False, slowdown=1.0)


class FaultInjector:
    def __init__(self, plan: FaultPlan | None = None):
        self.plan = plan or FaultPlan()
        self._rng = random.Random(self.plan.rng_seed)

    def decide(self, kind: str) -> FaultDecision:
        """Roll the dice for one invocation or storage request."""
        plan = self.plan
        if plan.is_neutral:
            return NO_FAULT
        if plan.scope != "both" and plan.scope != kind:
            return NO_FAULT
        if plan.crash_fraction > 0 and self._rng.random() < plan.crash_fraction:
            return FaultDecision(crash=True, slowdown=1.0)
        if (plan.straggler_fraction > 0
                and self._rng.random() < plan.straggler_fraction):
            return FaultDecision(crash=False, slowdown=plan.straggler_slowdown)
        return NO_FAULT
