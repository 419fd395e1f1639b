"""Benchmark kit: data generator, reference oracle, reports, and sweeps."""

from .datagen import generate
from .oracle import load_table, rows_from_batch, run_oracle
from .queries import LINEITEM, ORDERS, QUERIES, TABLE_SCHEMAS
from .reports import (RunReport, accrue_storage, bytes_transferred,
                      compute_cost_cents, report, run_entries)
from .sweep import SweepPoint, sweep

__all__ = [
    "generate",
    "load_table", "rows_from_batch", "run_oracle",
    "LINEITEM", "ORDERS", "QUERIES", "TABLE_SCHEMAS",
    "RunReport", "accrue_storage", "bytes_transferred",
    "compute_cost_cents", "report", "run_entries",
    "SweepPoint", "sweep",
]
