"""Push-based vectorized physical operators.

Every operator receives batches via push() and flushes state via finish().
Pipeline-breaking operators (aggregates, sort, exchange writes) buffer
their input and enforce the worker memory budget, raising OutOfBudget to
signal data skew to the coordinator.

Determinism: aggregate group order and exchange partition contents are
pure functions of the input values, so re-executing a fragment yields
byte-identical output objects."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import OutOfBudget, TypeMismatch
from ..formats.io_handlers import IoStats, OutputHandler
from ..formats.schema import (NUMPY_DTYPES, Column, RecordBatch, TableSchema,
                              concat_batches)
from ..frontend.logical import AggExpr, BColumn
from ..planner.physical import (PFilter, PFinalAgg, PHashJoin, PLimit,
                                PPartialAgg, PProject, PhysOp, PSort,
                                op_output_schema)
from ..sim.clock import SimContext
from ..sim.storage import ObjectStore
from .expressions import div_round_half_even, evaluate, truthy

DEFAULT_MEMORY_BUDGET = 512 * 1024 * 1024
_OBJ_ROW_BYTES = 24  # flat estimate for string cells

AVG_SCALE = 6


def batch_nbytes(batch: RecordBatch) -> int:
    total = 0
    for col in batch.columns:
        if col.dtype == object:
            total += _OBJ_ROW_BYTES * len(col)
        else:
            total += col.nbytes
    return total


def _take(batch: RecordBatch, index: np.ndarray) -> RecordBatch:
    return RecordBatch(
        batch.schema,
        [c[index] for c in batch.columns],
        [v[index] if v is not None else None for v in batch.validity])


class Operator:
    def push(self, batch: RecordBatch) -> None:
        raise NotImplementedError

    def finish(self) -> None:
        raise NotImplementedError


class CollectSink(Operator):
    """In-memory terminal; used by tests and result readers."""

    def __init__(self, schema: TableSchema):
        self.schema = schema
        self.batches: list[RecordBatch] = []

    def push(self, batch: RecordBatch) -> None:
        self.batches.append(batch)

    def finish(self) -> None:
        pass

    def result(self) -> RecordBatch:
        return concat_batches(self.schema, self.batches)


class FilterOp(Operator):
    def __init__(self, op: PFilter, down: Operator):
        self.predicate = op.predicate
        self.down = down

    def push(self, batch: RecordBatch) -> None:
        keep = truthy(*evaluate(self.predicate, batch))
        if keep.all():
            self.down.push(batch)
        elif keep.any():
            self.down.push(_take(batch, np.flatnonzero(keep)))

    def finish(self) -> None:
        self.down.finish()


class ProjectOp(Operator):
    def __init__(self, op: PProject, input_schema: TableSchema,
                 down: Operator):
        self.op = op
        self.schema = op_output_schema(op, input_schema)
        self.down = down

    def push(self, batch: RecordBatch) -> None:
        cols = []
        masks = []
        for expr in self.op.exprs:
            v, m = evaluate(expr, batch)
            cols.append(np.asarray(v))
            masks.append(m)
        self.down.push(RecordBatch(self.schema, cols, masks))

    def finish(self) -> None:
        self.down.finish()


class _Buffering(Operator):
    """Shared buffering + memory budget accounting."""

    def __init__(self, schema: TableSchema, down: Optional[Operator],
                 memory_budget: int):
        self.schema = schema
        self.down = down
        self._budget = memory_budget
        self._bytes = 0
        self._batches: list[RecordBatch] = []

    def push(self, batch: RecordBatch) -> None:
        self._bytes += batch_nbytes(batch)
        if self._bytes > self._budget:
            raise OutOfBudget(
                f"buffered {self._bytes} bytes exceeds budget {self._budget}")
        self._batches.append(batch)

    def buffered(self) -> RecordBatch:
        return concat_batches(self.schema, self._batches)


# --- grouping ---

def group_codes(key_arrays: list[np.ndarray],
                ) -> tuple[list[np.ndarray], np.ndarray, int]:
    """(group key values, per-row group index, group count); groups are
    ordered by ascending key tuples, so output order is deterministic."""
    codes: Optional[np.ndarray] = None
    for arr in key_arrays:
        uniq, inv = np.unique(arr, return_inverse=True)
        inv = inv.astype(np.int64)
        codes = inv if codes is None else codes * len(uniq) + inv
    assert codes is not None
    _, first, inv2 = np.unique(codes, return_index=True, return_inverse=True)
    return [a[first] for a in key_arrays], inv2.astype(np.int64), len(first)


@dataclass
class _AggState:
    values: np.ndarray  # per-group accumulator (or counts)
    counts: np.ndarray  # valid contributions per group
    extra: Optional[np.ndarray] = None  # avg: counts column


def _sum_state(inv: np.ndarray, groups: int, values: np.ndarray,
               mask: Optional[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    if mask is not None and not mask.all():
        keep = np.flatnonzero(mask)
        inv = inv[keep]
        values = values[keep]
    out = np.zeros(groups, dtype=values.dtype)
    np.add.at(out, inv, values)
    counts = np.bincount(inv, minlength=groups).astype(np.int64)
    return out, counts


def _minmax_state(inv: np.ndarray, groups: int, values: np.ndarray,
                  mask: Optional[np.ndarray], want_min: bool,
                  ) -> tuple[np.ndarray, np.ndarray]:
    if mask is not None and not mask.all():
        keep = np.flatnonzero(mask)
        inv = inv[keep]
        values = values[keep]
    counts = np.bincount(inv, minlength=groups).astype(np.int64)
    if values.dtype == object:
        out = np.empty(groups, dtype=object)
        for g, v in zip(inv.tolist(), values.tolist()):
            cur = out[g]
            if cur is None or (v < cur if want_min else v > cur):
                out[g] = v
        for g in range(groups):
            if out[g] is None:
                out[g] = ""
        return out, counts
    if values.dtype == np.float64:
        init = np.inf if want_min else -np.inf
    else:
        info = np.iinfo(np.int64)
        init = info.max if want_min else info.min
    out = np.full(groups, init, dtype=values.dtype)
    if want_min:
        np.minimum.at(out, inv, values)
    else:
        np.maximum.at(out, inv, values)
    out[counts == 0] = 0
    return out, counts


class PartialAggOp(_Buffering):
    """Per-fragment grouping into mergeable states (avg = sum + count)."""

    def __init__(self, op: PPartialAgg, input_schema: TableSchema,
                 down: Operator, memory_budget: int):
        super().__init__(input_schema, down, memory_budget)
        self.op = op
        self.out_schema = op_output_schema(op, input_schema)

    def finish(self) -> None:
        data = self.buffered()
        inv, groups, key_cols = _agg_groups(self.op.keys, data)
        cols: list[np.ndarray] = list(key_cols)
        masks: list[Optional[np.ndarray]] = [None] * len(key_cols)
        for agg in self.op.aggs:
            if agg.arg is not None:
                values, vmask = evaluate(agg.arg, data)
                values = np.asarray(values)
            if agg.func == "count":
                if agg.arg is None:
                    counts = np.bincount(inv,
                                         minlength=groups).astype(np.int64)
                else:
                    _, counts = _sum_state(inv, groups, values, vmask)
                cols.append(counts)
                masks.append(None)
            elif agg.func == "sum":
                out, counts = _sum_state(inv, groups, values, vmask)
                cols.append(out)
                masks.append(counts > 0)
            elif agg.func == "avg":
                out, counts = _sum_state(inv, groups, values, vmask)
                cols.append(out)
                masks.append(counts > 0)
                cols.append(counts)
                masks.append(None)
            elif agg.func in ("min", "max"):
                out, counts = _minmax_state(inv, groups, values, vmask,
                                            agg.func == "min")
                cols.append(out)
                masks.append(counts > 0)
            else:
                raise TypeMismatch(f"aggregate {agg.func!r}")
        self.down.push(RecordBatch(self.out_schema, cols, masks))
        self.down.finish()


class FinalAggOp(_Buffering):
    """Merges partial states and finalizes aggregate values."""

    def __init__(self, op: PFinalAgg, input_schema: TableSchema,
                 down: Operator, memory_budget: int):
        super().__init__(input_schema, down, memory_budget)
        self.op = op
        self.partial_schema = input_schema
        self.out_schema = op_output_schema(op, input_schema)

    def _state(self, data: RecordBatch,
               name: str) -> tuple[np.ndarray, Optional[np.ndarray]]:
        idx = self.partial_schema.index(name)
        return data.columns[idx], data.validity[idx]

    def finish(self) -> None:
        data = self.buffered()
        inv, groups, key_cols = _agg_groups(self.op.keys, data)
        cols: list[np.ndarray] = list(key_cols)
        masks: list[Optional[np.ndarray]] = [None] * len(key_cols)
        for agg in self.op.aggs:
            if agg.func == "count":
                state, _ = self._state(data, agg.alias)
                out, _ = _sum_state(inv, groups, state, None)
                cols.append(out)
                masks.append(None)
            elif agg.func == "sum":
                state, smask = self._state(data, agg.alias)
                out, counts = _sum_state(inv, groups, state, smask)
                cols.append(out)
                masks.append(counts > 0)
            elif agg.func in ("min", "max"):
                state, smask = self._state(data, agg.alias)
                out, counts = _minmax_state(inv, groups, state, smask,
                                            agg.func == "min")
                cols.append(out)
                masks.append(counts > 0)
            elif agg.func == "avg":
                sums, smask = self._state(data, f"{agg.alias}__sum")
                cnts, _ = self._state(data, f"{agg.alias}__cnt")
                total, valid = _sum_state(inv, groups, sums, smask)
                count, _ = _sum_state(inv, groups, cnts, None)
                cols.append(_finalize_avg(agg, total, count))
                masks.append(count > 0)
            else:
                raise TypeMismatch(f"aggregate {agg.func!r}")
        self.down.push(RecordBatch(self.out_schema, cols, masks))
        self.down.finish()


def _agg_groups(keys: tuple[BColumn, ...], data: RecordBatch,
                ) -> tuple[np.ndarray, int, list[np.ndarray]]:
    if keys:
        key_arrays = [data.column(k.name) for k in keys]
        key_cols, inv, groups = group_codes(key_arrays)
        return inv, groups, key_cols
    # global aggregate: one group, even over zero rows
    return np.zeros(data.row_count, dtype=np.int64), 1, []


def _finalize_avg(agg: AggExpr, total: np.ndarray,
                  count: np.ndarray) -> np.ndarray:
    safe = np.where(count == 0, 1, count)
    if agg.dtype.kind == "float64":
        return total.astype(np.float64) / safe
    sum_scale = agg.arg.dtype.scale if agg.arg.dtype.kind == "decimal" else 0
    shift = AVG_SCALE - sum_scale
    numer = total.astype(np.int64)
    denom = safe.astype(np.int64)
    if shift >= 0:
        numer = numer * np.int64(10) ** shift
    else:
        denom = denom * np.int64(10) ** (-shift)
    return div_round_half_even(numer, denom)


class HashJoinOp(Operator):
    """Inner equi-join; the build side is fully materialized up front."""

    def __init__(self, op: PHashJoin, input_schema: TableSchema,
                 build: RecordBatch, down: Operator):
        self.op = op
        self.probe_schema = input_schema
        self.schema = op_output_schema(op, input_schema)
        self.down = down
        self.build = build
        build_keys = [build.column(k) for k in op.right_keys]
        table: dict = {}
        if len(build_keys) == 1:
            for i, v in enumerate(build_keys[0].tolist()):
                table.setdefault(v, []).append(i)
        else:
            for i, row in enumerate(zip(*(k.tolist() for k in build_keys))):
                table.setdefault(row, []).append(i)
        self._table = table
        self._single = len(build_keys) == 1

    def push(self, batch: RecordBatch) -> None:
        probe_keys = [batch.column(k) for k in self.op.left_keys]
        li: list[int] = []
        bi: list[int] = []
        if self._single:
            probe_iter = probe_keys[0].tolist()
        else:
            probe_iter = list(zip(*(k.tolist() for k in probe_keys)))
        table = self._table
        for i, key in enumerate(probe_iter):
            hits = table.get(key)
            if hits:
                li.extend([i] * len(hits))
                bi.extend(hits)
        if not li:
            return
        left_idx = np.asarray(li, dtype=np.int64)
        right_idx = np.asarray(bi, dtype=np.int64)
        cols = [c[left_idx] for c in batch.columns]
        cols += [c[right_idx] for c in self.build.columns]
        masks = [m[left_idx] if m is not None else None
                 for m in batch.validity]
        masks += [m[right_idx] if m is not None else None
                  for m in self.build.validity]
        out = RecordBatch(self.schema, cols, masks)
        if self.op.residual is not None:
            keep = truthy(*evaluate(self.op.residual, out))
            if not keep.all():
                if not keep.any():
                    return
                out = _take(out, np.flatnonzero(keep))
        self.down.push(out)

    def finish(self) -> None:
        self.down.finish()


class SortOp(_Buffering):
    def __init__(self, op: PSort, schema: TableSchema, down: Operator,
                 memory_budget: int):
        super().__init__(schema, down, memory_budget)
        self.keys = op.keys

    def finish(self) -> None:
        data = self.buffered()
        order = np.arange(data.row_count)
        for name, ascending in reversed(self.keys):
            col = data.column(name)
            _, codes = np.unique(col, return_inverse=True)
            if not ascending:
                codes = -codes
            order = order[np.argsort(codes[order], kind="stable")]
        self.down.push(_take(data, order))
        self.down.finish()


class LimitOp(Operator):
    def __init__(self, op: PLimit, down: Operator):
        self.remaining = op.limit
        self.down = down

    def push(self, batch: RecordBatch) -> None:
        if self.remaining <= 0:
            return
        if batch.row_count <= self.remaining:
            self.remaining -= batch.row_count
            self.down.push(batch)
        else:
            self.down.push(batch.slice(0, self.remaining))
            self.remaining = 0

    def finish(self) -> None:
        self.down.finish()


# --- terminal writers ---

@dataclass
class OutputRecord:
    bucket: str
    key: str
    partition: Optional[int]
    rows: int
    nbytes: int

    def to_json(self) -> dict:
        return {"bucket": self.bucket, "key": self.key,
                "partition": self.partition, "rows": self.rows,
                "bytes": self.nbytes}


class ExchangeWriter(_Buffering):
    """Hash-partitions its input and writes one object per partition."""

    def __init__(self, schema: TableSchema, ctx: SimContext,
                 store: ObjectStore, bucket: str, key_prefix: str,
                 partition_count: int, hash_keys: tuple[str, ...],
                 storage_class: str, stats: IoStats, memory_budget: int):
        super().__init__(schema, None, memory_budget)
        self.ctx = ctx
        self.store = store
        self.bucket = bucket
        self.key_prefix = key_prefix
        self.partition_count = partition_count
        self.hash_keys = hash_keys
        self.storage_class = storage_class
        self.stats = stats
        self.outputs: list[OutputRecord] = []

    def finish(self) -> None:
        from .hashing import partition_rows
        data = self.buffered()
        if self.hash_keys:
            parts = partition_rows([data.column(k) for k in self.hash_keys],
                                   self.partition_count)
        else:
            parts = np.zeros(data.row_count, dtype=np.int64)
        for p in range(self.partition_count):
            subset = _take(data, np.flatnonzero(parts == p))
            key = f"{self.key_prefix}/part{p}"
            handler = OutputHandler(self.ctx, self.store, self.bucket, key,
                                    self.schema,
                                    storage_class=self.storage_class,
                                    stats=self.stats)
            if subset.row_count:
                handler.append(subset)
            handler.finalize()
            self.outputs.append(OutputRecord(
                self.bucket, key, p, subset.row_count,
                self.store.object_size(self.bucket, key)))


class CollectWriter(_Buffering):
    """Writes the fragment's whole output as a single object."""

    def __init__(self, schema: TableSchema, ctx: SimContext,
                 store: ObjectStore, bucket: str, key: str,
                 storage_class: str, stats: IoStats, memory_budget: int):
        super().__init__(schema, None, memory_budget)
        self.ctx = ctx
        self.store = store
        self.bucket = bucket
        self.key = key
        self.storage_class = storage_class
        self.stats = stats
        self.outputs: list[OutputRecord] = []

    def finish(self) -> None:
        data = self.buffered()
        handler = OutputHandler(self.ctx, self.store, self.bucket, self.key,
                                self.schema, storage_class=self.storage_class,
                                stats=self.stats)
        if data.row_count:
            handler.append(data)
        handler.finalize()
        self.outputs.append(OutputRecord(
            self.bucket, self.key, None, data.row_count,
            self.store.object_size(self.bucket, self.key)))


def compile_chain(ops: tuple[PhysOp, ...], input_schema: TableSchema,
                  terminal: Operator,
                  build: Optional[RecordBatch] = None,
                  memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Operator:
    """Wire the op chain back-to-front onto the terminal operator."""
    schemas = [input_schema]
    for op in ops:
        schemas.append(op_output_schema(op, schemas[-1]))
    head: Operator = terminal
    for op, schema in zip(reversed(ops), reversed(schemas[:-1])):
        if isinstance(op, PFilter):
            head = FilterOp(op, head)
        elif isinstance(op, PProject):
            head = ProjectOp(op, schema, head)
        elif isinstance(op, PPartialAgg):
            head = PartialAggOp(op, schema, head, memory_budget)
        elif isinstance(op, PFinalAgg):
            head = FinalAggOp(op, schema, head, memory_budget)
        elif isinstance(op, PHashJoin):
            if build is None:
                raise TypeMismatch("hash join requires a build input")
            head = HashJoinOp(op, schema, build, head)
        elif isinstance(op, PSort):
            head = SortOp(op, schema, head, memory_budget)
        elif isinstance(op, PLimit):
            head = LimitOp(op, head)
        else:
            raise TypeMismatch(f"unknown operator {type(op).__name__}")
    return head
