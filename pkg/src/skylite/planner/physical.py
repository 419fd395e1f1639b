"""Physical planning: maps an optimized logical plan onto a DAG of
pipelines, each a chain of physical operators executed by W parallel
fragments with exchanges (shuffles through shared storage) at pipeline
breaks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import NotSupported
from ..formats.catalog import Catalog
from ..formats.schema import INT64, Column, DataType, TableSchema, decimal
from ..frontend.logical import (AggExpr, BColumn, BCompare, BExpr, BLiteral,
                                LAggregate, LCrossJoin, LFilter, LJoin,
                                LLimit, LogicalPlan, LProject, LScan, LSort,
                                agg_from_json, agg_to_json, expr_from_json,
                                expr_to_json)
from .rules import estimate_bytes, split_conjuncts
from .sizing import SizingModel

MAX_DECIMAL_PRECISION = 18


# --- physical operators ---

class PhysOp:
    pass


@dataclass(frozen=True)
class PFilter(PhysOp):
    predicate: BExpr


@dataclass(frozen=True)
class PProject(PhysOp):
    exprs: tuple[BExpr, ...]
    names: tuple[str, ...]


@dataclass(frozen=True)
class PPartialAgg(PhysOp):
    keys: tuple[BColumn, ...]
    aggs: tuple[AggExpr, ...]


@dataclass(frozen=True)
class PFinalAgg(PhysOp):
    keys: tuple[BColumn, ...]
    aggs: tuple[AggExpr, ...]


@dataclass(frozen=True)
class PHashJoin(PhysOp):
    mode: str  # broadcast | repartition
    left_keys: tuple[str, ...]
    right_keys: tuple[str, ...]
    residual: Optional[BExpr]
    build_schema: TableSchema


@dataclass(frozen=True)
class PSort(PhysOp):
    keys: tuple[tuple[str, bool], ...]


@dataclass(frozen=True)
class PLimit(PhysOp):
    limit: int


def agg_state_columns(agg: AggExpr) -> list[Column]:
    """Columns a partial aggregate emits for one aggregate expression."""
    if agg.func == "avg":
        sum_dt = agg.arg.dtype if agg.arg.dtype.kind == "float64" else \
            decimal(MAX_DECIMAL_PRECISION, agg.arg.dtype.scale)
        return [Column(f"{agg.alias}__sum", sum_dt, nullable=True),
                Column(f"{agg.alias}__cnt", INT64)]
    if agg.func == "count":
        return [Column(agg.alias, INT64)]
    # sum/min/max states are null until a valid value arrives
    return [Column(agg.alias, agg.dtype, nullable=True)]


def partial_agg_schema(keys: tuple[BColumn, ...],
                       aggs: tuple[AggExpr, ...]) -> TableSchema:
    cols = [Column(k.name, k.dtype) for k in keys]
    for a in aggs:
        cols.extend(agg_state_columns(a))
    return TableSchema("partial", tuple(cols))


def final_agg_schema(keys: tuple[BColumn, ...],
                     aggs: tuple[AggExpr, ...]) -> TableSchema:
    cols = [Column(k.name, k.dtype) for k in keys]
    cols += [Column(a.alias, a.dtype, nullable=a.func != "count")
             for a in aggs]
    return TableSchema("aggregate", tuple(cols))


def op_output_schema(op: PhysOp, input_schema: TableSchema) -> TableSchema:
    if isinstance(op, (PFilter, PSort, PLimit)):
        return input_schema
    if isinstance(op, PProject):
        cols = tuple(Column(n, e.dtype) for n, e in zip(op.names, op.exprs))
        return TableSchema("project", cols)
    if isinstance(op, PPartialAgg):
        return partial_agg_schema(op.keys, op.aggs)
    if isinstance(op, PFinalAgg):
        return final_agg_schema(op.keys, op.aggs)
    if isinstance(op, PHashJoin):
        return TableSchema("join",
                           input_schema.columns + op.build_schema.columns)
    raise TypeError(type(op).__name__)


def chain_output_schema(ops: list[PhysOp],
                        input_schema: TableSchema) -> TableSchema:
    schema = input_schema
    for op in ops:
        schema = op_output_schema(op, schema)
    return schema


# --- operator wire format ---

def op_to_json(op: PhysOp) -> dict:
    if isinstance(op, PFilter):
        return {"op": "filter", "predicate": expr_to_json(op.predicate)}
    if isinstance(op, PProject):
        return {"op": "project",
                "exprs": [expr_to_json(e) for e in op.exprs],
                "names": list(op.names)}
    if isinstance(op, PPartialAgg):
        return {"op": "partial_agg",
                "keys": [expr_to_json(k) for k in op.keys],
                "aggs": [agg_to_json(a) for a in op.aggs]}
    if isinstance(op, PFinalAgg):
        return {"op": "final_agg",
                "keys": [expr_to_json(k) for k in op.keys],
                "aggs": [agg_to_json(a) for a in op.aggs]}
    if isinstance(op, PHashJoin):
        return {"op": "hash_join", "mode": op.mode,
                "left_keys": list(op.left_keys),
                "right_keys": list(op.right_keys),
                "residual": expr_to_json(op.residual)
                            if op.residual is not None else None,
                "build_schema": op.build_schema.to_dict()}
    if isinstance(op, PSort):
        return {"op": "sort", "keys": [[c, asc] for c, asc in op.keys]}
    if isinstance(op, PLimit):
        return {"op": "limit", "limit": op.limit}
    raise TypeError(type(op).__name__)


def op_from_json(d: dict) -> PhysOp:
    kind = d["op"]
    if kind == "filter":
        return PFilter(expr_from_json(d["predicate"]))
    if kind == "project":
        return PProject(tuple(expr_from_json(e) for e in d["exprs"]),
                        tuple(d["names"]))
    if kind in ("partial_agg", "final_agg"):
        keys = tuple(expr_from_json(k) for k in d["keys"])
        aggs = tuple(agg_from_json(a) for a in d["aggs"])
        cls = PPartialAgg if kind == "partial_agg" else PFinalAgg
        return cls(keys, aggs)  # type: ignore[arg-type]
    if kind == "hash_join":
        residual = expr_from_json(d["residual"]) \
            if d["residual"] is not None else None
        return PHashJoin(d["mode"], tuple(d["left_keys"]),
                         tuple(d["right_keys"]), residual,
                         TableSchema.from_dict(d["build_schema"]))
    if kind == "sort":
        return PSort(tuple((c, asc) for c, asc in d["keys"]))
    if kind == "limit":
        return PLimit(d["limit"])
    raise ValueError(f"unknown physical op {kind!r}")


# --- pipeline DAG ---

@dataclass(frozen=True)
class ScanSource:
    table: str
    schema: TableSchema  # full table schema
    projected: tuple[str, ...]
    bounds: tuple[dict, ...]  # pushed min/max predicates for pruning


@dataclass(frozen=True)
class ExchangeSource:
    producer: int  # pipeline id
    schema: TableSchema


@dataclass(frozen=True)
class BuildInput:
    kind: str  # broadcast | exchange
    producer: int
    schema: TableSchema


@dataclass(frozen=True)
class ExchangeOutput:
    partition_count: int
    hash_keys: tuple[str, ...]
    storage_class: str


@dataclass(frozen=True)
class CollectOutput:
    storage_class: str = "standard"


@dataclass
class PipelinePlan:
    id: int
    source: Union[ScanSource, ExchangeSource]
    build: Optional[BuildInput]
    ops: list[PhysOp]
    w: int
    output: Union[ExchangeOutput, CollectOutput]

    @property
    def deps(self) -> list[int]:
        out = []
        if isinstance(self.source, ExchangeSource):
            out.append(self.source.producer)
        if self.build is not None:
            out.append(self.build.producer)
        return out

    @property
    def input_schema(self) -> TableSchema:
        if isinstance(self.source, ScanSource):
            return self.source.schema.select(self.source.projected)
        return self.source.schema

    @property
    def output_schema(self) -> TableSchema:
        return chain_output_schema(self.ops, self.input_schema)


@dataclass
class PhysicalQueryPlan:
    pipelines: list[PipelinePlan]  # topological order
    sink: int  # pipeline id of the single sink

    def pipeline(self, pid: int) -> PipelinePlan:
        return self.pipelines[pid]

    def consumers(self, pid: int) -> list[int]:
        return [p.id for p in self.pipelines if pid in p.deps]


# --- scan bound extraction ---

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}


def extract_bounds(conjuncts: list[BExpr],
                   scan_columns: set[str]) -> list[dict]:
    """min/max windows from column-vs-literal comparisons, for row-group
    pruning. Never removes rows: the full predicate still runs."""
    windows: dict[str, dict] = {}
    for c in conjuncts:
        if not isinstance(c, BCompare):
            continue
        if isinstance(c.left, BColumn) and isinstance(c.right, BLiteral):
            col, lit, op = c.left, c.right, c.op
        elif isinstance(c.right, BColumn) and isinstance(c.left, BLiteral):
            col, lit, op = c.right, c.left, _FLIP[c.op]
        else:
            continue
        if col.name not in scan_columns or lit.value is None:
            continue
        if col.dtype.kind != lit.dtype.kind or \
                col.dtype.scale != lit.dtype.scale:
            continue  # scale-mismatched comparisons skip pruning
        w = windows.setdefault(col.name, {
            "column": col.name, "low": None, "high": None,
            "low_inclusive": True, "high_inclusive": True})
        v = lit.value
        if op in (">", ">=", "="):
            if w["low"] is None or v > w["low"]:
                w["low"] = v
                w["low_inclusive"] = op != ">"
        if op in ("<", "<=", "="):
            if w["high"] is None or v < w["high"]:
                w["high"] = v
                w["high_inclusive"] = op != "<"
    return [windows[k] for k in sorted(windows)]


# --- planning ---

@dataclass
class _OpenPipe:
    """A pipeline under construction: source plus the op chain so far."""
    source: Union[ScanSource, ExchangeSource]
    build: Optional[BuildInput]
    ops: list[PhysOp]
    w: int
    est_bytes: int


class PhysicalPlanner:
    def __init__(self, catalog: Catalog, sizing: Optional[SizingModel] = None,
                 force_w: Optional[int] = None):
        self.catalog = catalog
        self.sizing = sizing if sizing is not None else SizingModel()
        self.force_w = force_w
        self._pipelines: list[PipelinePlan] = []

    def plan(self, lqp: LogicalPlan) -> PhysicalQueryPlan:
        self._pipelines = []

        # peel sink-only operators off the top
        sink_ops: list[PhysOp] = []
        node = lqp
        if isinstance(node, LLimit):
            sink_ops.append(PLimit(node.limit))
            node = node.child
        if isinstance(node, LSort):
            sink_ops.insert(0, PSort(node.keys))
            node = node.child

        if isinstance(node, LAggregate):
            pipe = self._compile_stream(node.child)
            pipe.ops.append(PPartialAgg(node.keys, node.aggs))
            partial_schema = chain_output_schema(
                pipe.ops, _pipe_input_schema(pipe))
            producer = self._close(pipe, ExchangeOutput(
                1, tuple(k.name for k in node.keys),
                self._shuffle_class(1, pipe.w)))
            sink = _OpenPipe(ExchangeSource(producer, partial_schema), None,
                             [PFinalAgg(node.keys, node.aggs)] + sink_ops,
                             1, 0)
            sink_id = self._close(sink, CollectOutput())
        else:
            pipe = self._compile_stream(node)
            if sink_ops:
                schema = chain_output_schema(pipe.ops,
                                             _pipe_input_schema(pipe))
                producer = self._close(pipe, ExchangeOutput(
                    1, (), self._shuffle_class(1, pipe.w)))
                sink = _OpenPipe(ExchangeSource(producer, schema), None,
                                 sink_ops, 1, 0)
                sink_id = self._close(sink, CollectOutput())
            else:
                sink_id = self._close(pipe, CollectOutput())

        return PhysicalQueryPlan(self._pipelines, sink_id)

    # -- stream compilation --

    def _compile_stream(self, node: LogicalPlan) -> _OpenPipe:
        if isinstance(node, LScan):
            est = estimate_bytes(node, self.catalog)
            w = self.force_w if self.force_w is not None \
                else self.sizing.size(est)
            source = ScanSource(node.table, node.schema, node.projected, ())
            return _OpenPipe(source, None, [], w, est)
        if isinstance(node, LFilter):
            pipe = self._compile_stream(node.child)
            conjuncts = split_conjuncts(node.predicate)
            if isinstance(pipe.source, ScanSource) and not pipe.ops:
                bounds = extract_bounds(conjuncts,
                                        set(pipe.source.projected))
                pipe.source = ScanSource(
                    pipe.source.table, pipe.source.schema,
                    pipe.source.projected,
                    tuple(bounds))  # type: ignore[arg-type]
            pipe.ops.append(PFilter(node.predicate))
            return pipe
        if isinstance(node, LProject):
            pipe = self._compile_stream(node.child)
            pipe.ops.append(PProject(node.exprs, node.names))
            return pipe
        if isinstance(node, LJoin):
            return self._compile_join(node)
        if isinstance(node, LCrossJoin):
            raise NotSupported("cross join without an equality condition")
        raise NotSupported(
            f"{type(node).__name__} below a pipeline breaker")

    def _compile_join(self, node: LJoin) -> _OpenPipe:
        probe = self._compile_stream(node.left)
        build = self._compile_stream(node.right)
        build_schema = node.right.output_schema
        build_est = build.est_bytes

        threshold = self.sizing.broadcast_threshold_bytes / max(1, probe.w)
        join_op = None
        if build_est <= threshold:
            build_id = self._close(build, CollectOutput())
            probe.ops.append(PHashJoin("broadcast", node.left_keys,
                                       node.right_keys, node.residual,
                                       build_schema))
            probe.build = BuildInput("broadcast", build_id, build_schema)
            return probe

        w_join = self.force_w if self.force_w is not None else probe.w
        probe_schema = chain_output_schema(probe.ops,
                                           _pipe_input_schema(probe))
        probe_id = self._close(probe, ExchangeOutput(
            w_join, node.left_keys, self._shuffle_class(w_join, probe.w)))
        build_out_schema = chain_output_schema(build.ops,
                                               _pipe_input_schema(build))
        build_id = self._close(build, ExchangeOutput(
            w_join, node.right_keys, self._shuffle_class(w_join, build.w)))
        joined = _OpenPipe(
            ExchangeSource(probe_id, probe_schema),
            BuildInput("exchange", build_id, build_out_schema),
            [PHashJoin("repartition", node.left_keys, node.right_keys,
                       node.residual, build_out_schema)],
            w_join, probe.est_bytes + build.est_bytes)
        return joined

    # -- helpers --

    def _shuffle_class(self, partition_count: int, producer_w: int) -> str:
        objects = partition_count * producer_w
        return "hot" if objects > self.sizing.hot_shuffle_object_threshold \
            else "standard"

    def _close(self, pipe: _OpenPipe,
               output: Union[ExchangeOutput, CollectOutput]) -> int:
        pid = len(self._pipelines)
        self._pipelines.append(PipelinePlan(
            pid, pipe.source, pipe.build, pipe.ops, pipe.w, output))
        return pid


def _pipe_input_schema(pipe: _OpenPipe) -> TableSchema:
    if isinstance(pipe.source, ScanSource):
        return pipe.source.schema.select(pipe.source.projected)
    return pipe.source.schema


def plan_physical(lqp: LogicalPlan, catalog: Catalog,
                  sizing: Optional[SizingModel] = None,
                  force_w: Optional[int] = None) -> PhysicalQueryPlan:
    return PhysicalPlanner(catalog, sizing, force_w).plan(lqp)


def describe_physical(pqp: PhysicalQueryPlan) -> str:
    lines = []
    for p in pqp.pipelines:
        if isinstance(p.source, ScanSource):
            src = f"scan {p.source.table}"
        else:
            src = f"exchange<-P{p.source.producer}"
        ops = ", ".join(type(o).__name__ for o in p.ops)
        if isinstance(p.output, ExchangeOutput):
            out = (f"exchange(parts={p.output.partition_count}, "
                   f"class={p.output.storage_class})")
        else:
            out = "collect"
        build = "" if p.build is None else \
            f" build={p.build.kind}<-P{p.build.producer}"
        mark = " [sink]" if p.id == pqp.sink else ""
        lines.append(f"P{p.id} W={p.w} {src}{build} [{ops}] -> {out}{mark}")
    return "\n".join(lines)
