"""Deterministic pseudo-TPC-H data generator.

Row counts scale with a scale factor (orders = 1.5M * SF, one to seven
line items per order). The value distributions follow the benchmark's
shape where the queries depend on it: the return-flag/line-status rules
pivot around 1995-06-17, receipt always trails shipment, and the ship
mode and order priority domains match the query constants. Identical
(sf, seed) pairs produce byte-identical objects."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..formats.catalog import Catalog, ManifestObject, TableManifest
from ..formats.io_handlers import OutputHandler
from ..formats.schema import RecordBatch, TableSchema, batch_from_arrays
from ..frontend.binder import date_to_days
from ..sim.clock import SimContext
from ..sim.simulator import Simulator
from .queries import LINEITEM, ORDERS

ORDERS_PER_SF = 1_500_000
MAX_LINES_PER_ORDER = 7
DEFAULT_SPLIT_BYTES = 8 * 1024 * 1024
ORDER_BLOCK = 200_000  # generation block; fixed so streams never depend on it

DATE_LO = date_to_days("1992-01-01")
DATE_HI = date_to_days("1998-08-02")
PIVOT = date_to_days("1995-06-17")  # return-flag / line-status cutover

SHIP_MODES = np.array(["AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP",
                       "TRUCK"], dtype=object)
SHIP_INSTRUCT = np.array(["COLLECT COD", "DELIVER IN PERSON", "NONE",
                          "TAKE BACK RETURN"], dtype=object)
PRIORITIES = np.array(["1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED",
                       "5-LOW"], dtype=object)
ORDER_STATUS = np.array(["F", "O", "P"], dtype=object)
VOCAB = np.array("""
the quick silver carton swiftly final deposits sleep furiously above
ironic requests boost blithely regular accounts nag across quiet pinto
beans wake slyly special packages along even theodolites cajole
""".split(), dtype=object)

# measured compressed row sizes, used only to pick rows-per-object
_EST_ROW_BYTES = {"lineitem": 33, "orders": 26}


def _comments(rng: np.random.Generator, n: int, words: int) -> np.ndarray:
    picks = rng.integers(0, len(VOCAB), (n, words))
    return np.array([" ".join(VOCAB[r]) for r in picks], dtype=object)


def _clerks(rng: np.random.Generator, n: int) -> np.ndarray:
    ids = rng.integers(1, 1000, n)
    return np.array([f"Clerk#{i:09d}" for i in ids], dtype=object)


class _TableWriter:
    """Buffers generated batches and emits fixed-size objects."""

    def __init__(self, ctx: SimContext, sim: Simulator, schema: TableSchema,
                 bucket: str, rows_per_object: int):
        self.ctx = ctx
        self.sim = sim
        self.schema = schema
        self.bucket = bucket
        self.rows_per_object = rows_per_object
        self.pending: list[RecordBatch] = []
        self.pending_rows = 0
        self.objects: list[ManifestObject] = []

    def push(self, batch: RecordBatch) -> None:
        self.pending.append(batch)
        self.pending_rows += batch.row_count
        while self.pending_rows >= self.rows_per_object:
            self._emit(self.rows_per_object)

    def flush(self) -> None:
        if self.pending_rows:
            self._emit(self.pending_rows)

    def _emit(self, rows: int) -> None:
        key = (f"tpch/{self.schema.table}/"
               f"{len(self.objects):05d}.skyc")
        handler = OutputHandler(self.ctx, self.sim.store, self.bucket, key,
                                self.schema)
        left = rows
        while left:
            head = self.pending[0]
            if head.row_count <= left:
                handler.append(head)
                left -= head.row_count
                self.pending.pop(0)
            else:
                handler.append(head.slice(0, left))
                self.pending[0] = head.slice(left, head.row_count)
                left = 0
        handler.finalize()
        self.pending_rows -= rows
        self.objects.append(ManifestObject(
            self.bucket, key, self.sim.store.object_size(self.bucket, key),
            rows))


def _orders_block(rng: np.random.Generator, keys: np.ndarray,
                  dates: np.ndarray) -> list[np.ndarray]:
    n = len(keys)
    return [
        keys,
        rng.integers(1, max(2, n * 10), n),
        rng.choice(ORDER_STATUS, n),
        rng.integers(100_000, 50_000_000, n),  # scale 2
        dates,
        rng.choice(PRIORITIES, n),
        _clerks(rng, n),
        np.zeros(n, dtype=np.int64),
        _comments(rng, n, 5),
    ]


def _lineitem_block(rng: np.random.Generator, okeys: np.ndarray,
                    odates: np.ndarray,
                    counts: np.ndarray) -> list[np.ndarray]:
    okey = np.repeat(okeys, counts)
    odate = np.repeat(odates, counts)
    n = len(okey)
    linenumber = np.concatenate(
        [np.arange(1, c + 1) for c in counts.tolist()]) if n else \
        np.zeros(0, dtype=np.int64)
    shipdate = odate + rng.integers(1, 122, n)
    commitdate = odate + rng.integers(30, 91, n)
    receiptdate = shipdate + rng.integers(1, 31, n)
    returned = rng.integers(0, 2, n).astype(bool)
    returnflag = np.where(receiptdate <= PIVOT,
                          np.where(returned, "R", "A"), "N").astype(object)
    linestatus = np.where(shipdate > PIVOT, "O", "F").astype(object)
    quantity = rng.integers(1, 51, n)
    price = rng.integers(90_000, 105_001, n)  # unit price, scale 2
    return [
        okey,
        rng.integers(1, 200_001, n),
        rng.integers(1, 10_001, n),
        linenumber,
        quantity * 100,
        quantity * price,
        rng.integers(0, 11, n),   # discount 0.00 .. 0.10
        rng.integers(0, 9, n),    # tax 0.00 .. 0.08
        returnflag,
        linestatus,
        shipdate,
        commitdate,
        receiptdate,
        rng.choice(SHIP_INSTRUCT, n),
        rng.choice(SHIP_MODES, n),
        _comments(rng, n, 4),
    ]


def generate(sim: Simulator, sf: float, seed: int = 0, bucket: str = "data",
             ctx: Optional[SimContext] = None,
             split_bytes: int = DEFAULT_SPLIT_BYTES) -> Catalog:
    """Generate both tables into the object store and return their catalog."""
    if ctx is None:
        ctx = sim.new_context("datagen")
    orders_n = max(1, int(round(ORDERS_PER_SF * sf)))

    writers = {
        name: _TableWriter(ctx, sim, schema, bucket, max(
            1024, split_bytes // _EST_ROW_BYTES[name]))
        for name, schema in (("orders", ORDERS), ("lineitem", LINEITEM))
    }
    o_rng = np.random.default_rng([seed, 1])
    l_rng = np.random.default_rng([seed, 2])

    for lo in range(0, orders_n, ORDER_BLOCK):
        hi = min(lo + ORDER_BLOCK, orders_n)
        keys = np.arange(lo + 1, hi + 1, dtype=np.int64)
        # sorted dates model date-clustered ingestion, which is what makes
        # min/max row-group pruning effective on the date predicates
        dates = np.sort(o_rng.integers(DATE_LO, DATE_HI + 1, hi - lo))
        counts = o_rng.integers(1, MAX_LINES_PER_ORDER + 1, hi - lo)
        writers["orders"].push(batch_from_arrays(
            ORDERS, _orders_block(o_rng, keys, dates)))
        writers["lineitem"].push(batch_from_arrays(
            LINEITEM, _lineitem_block(l_rng, keys, dates, counts)))

    catalog = Catalog(generation={"tool": "skylite-datagen", "sf": sf,
                                  "seed": seed})
    for name, schema in (("lineitem", LINEITEM), ("orders", ORDERS)):
        writers[name].flush()
        catalog.add_table(schema, TableManifest(name, writers[name].objects))
    return catalog
