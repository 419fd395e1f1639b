"""Append-only dollar accounting for every billable simulator event."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

CATEGORIES = (
    "compute_gib_s",
    "requests_read",
    "requests_write",
    "transfer_gib",
    "storage_gib_mo",
    "queue_msgs",
)


@dataclass(frozen=True)
class LedgerEntry:
    t_us: int
    category: str
    quantity: float
    cost_cents: float
    note: str = ""


@dataclass
class CostLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def add(self, t_us: int, category: str, quantity: float,
            cost_cents: float, note: str = "") -> LedgerEntry:
        if category not in CATEGORIES:
            raise ValueError(f"unknown ledger category {category!r}")
        entry = LedgerEntry(t_us, category, quantity, cost_cents, note)
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def mark(self) -> int:
        """Index usable to slice off the entries of a later time window."""
        return len(self.entries)

    def since(self, mark: int) -> list[LedgerEntry]:
        return self.entries[mark:]


def total_cost(entries: Iterable[LedgerEntry],
               category: Optional[str] = None) -> float:
    """Sum of matching entry costs in cents."""
    return sum(e.cost_cents for e in entries
               if category is None or e.category == category)


def total_quantity(entries: Iterable[LedgerEntry], category: str) -> float:
    return sum(e.quantity for e in entries if e.category == category)
