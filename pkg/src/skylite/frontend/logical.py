"""Bound (typed) expressions and the logical plan, with the JSON wire format
used to ship fragment specs to workers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union

from ..formats.schema import BOOL, Column, DataType, TableSchema

COMPARE_OPS = ("=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/")


class BExpr:
    """Base class for bound expressions; every node carries its dtype."""
    dtype: DataType


@dataclass(frozen=True)
class BColumn(BExpr):
    name: str
    dtype: DataType


@dataclass(frozen=True)
class BLiteral(BExpr):
    # decimals and dates as scaled/epoch-days ints, matching column storage
    value: Union[int, float, str, bool, None]
    dtype: DataType


@dataclass(frozen=True)
class BArith(BExpr):
    op: str  # + - * /
    left: BExpr
    right: BExpr
    dtype: DataType


@dataclass(frozen=True)
class BScale(BExpr):
    """Multiply a decimal's underlying int by 10**delta to align scales."""
    expr: BExpr
    delta: int
    dtype: DataType


@dataclass(frozen=True)
class BCompare(BExpr):
    op: str
    left: BExpr
    right: BExpr
    dtype: DataType = BOOL


@dataclass(frozen=True)
class BLogical(BExpr):
    op: str  # and | or
    args: tuple[BExpr, ...]
    dtype: DataType = BOOL


@dataclass(frozen=True)
class BNot(BExpr):
    expr: BExpr
    dtype: DataType = BOOL


@dataclass(frozen=True)
class BIn(BExpr):
    expr: BExpr
    items: tuple[BLiteral, ...]
    dtype: DataType = BOOL


@dataclass(frozen=True)
class BCase(BExpr):
    whens: tuple[tuple[BExpr, BExpr], ...]
    else_: Optional[BExpr]
    dtype: DataType


@dataclass(frozen=True)
class AggExpr:
    func: str  # sum | avg | count | min | max
    arg: Optional[BExpr]  # None for count(*)
    dtype: DataType  # output type
    alias: str


def expr_columns(expr: BExpr) -> set[str]:
    if isinstance(expr, BColumn):
        return {expr.name}
    if isinstance(expr, BLiteral):
        return set()
    if isinstance(expr, (BArith, BCompare)):
        return expr_columns(expr.left) | expr_columns(expr.right)
    if isinstance(expr, BLogical):
        out: set[str] = set()
        for a in expr.args:
            out |= expr_columns(a)
        return out
    if isinstance(expr, (BNot, BScale)):
        return expr_columns(expr.expr)
    if isinstance(expr, BIn):
        return expr_columns(expr.expr)
    if isinstance(expr, BCase):
        out = set()
        for cond, result in expr.whens:
            out |= expr_columns(cond) | expr_columns(result)
        if expr.else_ is not None:
            out |= expr_columns(expr.else_)
        return out
    raise TypeError(type(expr).__name__)


# --- expression wire format ---

def _dtype_to_json(dt: DataType) -> dict:
    return {"kind": dt.kind, "precision": dt.precision, "scale": dt.scale}


def _dtype_from_json(d: dict) -> DataType:
    return DataType(d["kind"], d.get("precision", 0), d.get("scale", 0))


def expr_to_json(expr: BExpr) -> dict:
    t = _dtype_to_json(expr.dtype)
    if isinstance(expr, BColumn):
        return {"node": "column", "name": expr.name, "dtype": t}
    if isinstance(expr, BLiteral):
        return {"node": "literal", "value": expr.value, "dtype": t}
    if isinstance(expr, BArith):
        return {"node": "arith", "op": expr.op,
                "left": expr_to_json(expr.left),
                "right": expr_to_json(expr.right), "dtype": t}
    if isinstance(expr, BScale):
        return {"node": "scale", "expr": expr_to_json(expr.expr),
                "delta": expr.delta, "dtype": t}
    if isinstance(expr, BCompare):
        return {"node": "compare", "op": expr.op,
                "left": expr_to_json(expr.left),
                "right": expr_to_json(expr.right)}
    if isinstance(expr, BLogical):
        return {"node": "logical", "op": expr.op,
                "args": [expr_to_json(a) for a in expr.args]}
    if isinstance(expr, BNot):
        return {"node": "not", "expr": expr_to_json(expr.expr)}
    if isinstance(expr, BIn):
        return {"node": "in", "expr": expr_to_json(expr.expr),
                "items": [expr_to_json(i) for i in expr.items]}
    if isinstance(expr, BCase):
        return {"node": "case",
                "whens": [[expr_to_json(c), expr_to_json(r)]
                          for c, r in expr.whens],
                "else": expr_to_json(expr.else_)
                        if expr.else_ is not None else None,
                "dtype": t}
    raise TypeError(type(expr).__name__)


def expr_from_json(d: dict) -> BExpr:
    node = d["node"]
    if node == "column":
        return BColumn(d["name"], _dtype_from_json(d["dtype"]))
    if node == "literal":
        return BLiteral(d["value"], _dtype_from_json(d["dtype"]))
    if node == "arith":
        return BArith(d["op"], expr_from_json(d["left"]),
                      expr_from_json(d["right"]), _dtype_from_json(d["dtype"]))
    if node == "scale":
        return BScale(expr_from_json(d["expr"]), d["delta"],
                      _dtype_from_json(d["dtype"]))
    if node == "compare":
        return BCompare(d["op"], expr_from_json(d["left"]),
                        expr_from_json(d["right"]))
    if node == "logical":
        return BLogical(d["op"], tuple(expr_from_json(a) for a in d["args"]))
    if node == "not":
        return BNot(expr_from_json(d["expr"]))
    if node == "in":
        items = tuple(expr_from_json(i) for i in d["items"])
        return BIn(expr_from_json(d["expr"]), items)  # type: ignore[arg-type]
    if node == "case":
        whens = tuple((expr_from_json(c), expr_from_json(r))
                      for c, r in d["whens"])
        else_ = expr_from_json(d["else"]) if d["else"] is not None else None
        return BCase(whens, else_, _dtype_from_json(d["dtype"]))
    raise ValueError(f"unknown expression node {node!r}")


def agg_to_json(agg: AggExpr) -> dict:
    return {"func": agg.func,
            "arg": expr_to_json(agg.arg) if agg.arg is not None else None,
            "dtype": _dtype_to_json(agg.dtype), "alias": agg.alias}


def agg_from_json(d: dict) -> AggExpr:
    arg = expr_from_json(d["arg"]) if d["arg"] is not None else None
    return AggExpr(d["func"], arg, _dtype_from_json(d["dtype"]), d["alias"])


# --- logical plan ---

class LogicalPlan:
    """Base class; every node exposes `output_schema` and `children`."""

    output_schema: TableSchema

    @property
    def children(self) -> tuple["LogicalPlan", ...]:
        return ()


@dataclass(frozen=True)
class LScan(LogicalPlan):
    table: str
    schema: TableSchema  # full table schema
    projected: tuple[str, ...]  # columns actually read

    @property
    def output_schema(self) -> TableSchema:
        return self.schema.select(self.projected)


@dataclass(frozen=True)
class LFilter(LogicalPlan):
    child: LogicalPlan
    predicate: BExpr

    @property
    def output_schema(self) -> TableSchema:
        return self.child.output_schema

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.child,)


@dataclass(frozen=True)
class LProject(LogicalPlan):
    child: LogicalPlan
    exprs: tuple[BExpr, ...]
    names: tuple[str, ...]

    @property
    def output_schema(self) -> TableSchema:
        cols = tuple(Column(n, e.dtype) for n, e in zip(self.names, self.exprs))
        return TableSchema("project", cols)

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.child,)


@dataclass(frozen=True)
class LAggregate(LogicalPlan):
    child: LogicalPlan
    keys: tuple[BColumn, ...]
    aggs: tuple[AggExpr, ...]

    @property
    def output_schema(self) -> TableSchema:
        cols = tuple(Column(k.name, k.dtype) for k in self.keys)
        cols += tuple(Column(a.alias, a.dtype) for a in self.aggs)
        return TableSchema("aggregate", cols)

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.child,)


@dataclass(frozen=True)
class LJoin(LogicalPlan):
    """Inner equi-join; `left_keys[i] = right_keys[i]` plus an optional
    residual predicate evaluated over the concatenated row."""
    left: LogicalPlan
    right: LogicalPlan
    left_keys: tuple[str, ...]
    right_keys: tuple[str, ...]
    residual: Optional[BExpr] = None

    @property
    def output_schema(self) -> TableSchema:
        cols = self.left.output_schema.columns + \
            self.right.output_schema.columns
        return TableSchema("join", cols)

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.left, self.right)


@dataclass(frozen=True)
class LSort(LogicalPlan):
    child: LogicalPlan
    keys: tuple[tuple[str, bool], ...]  # (column, ascending)

    @property
    def output_schema(self) -> TableSchema:
        return self.child.output_schema

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.child,)


@dataclass(frozen=True)
class LLimit(LogicalPlan):
    child: LogicalPlan
    limit: int

    @property
    def output_schema(self) -> TableSchema:
        return self.child.output_schema

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.child,)


@dataclass(frozen=True)
class LCrossJoin(LogicalPlan):
    """Unoptimized comma join; the optimizer must rewrite it into LJoin."""
    left: LogicalPlan
    right: LogicalPlan

    @property
    def output_schema(self) -> TableSchema:
        cols = self.left.output_schema.columns + \
            self.right.output_schema.columns
        return TableSchema("cross", cols)

    @property
    def children(self) -> tuple[LogicalPlan, ...]:
        return (self.left, self.right)


def plan_to_json(plan: LogicalPlan) -> dict:
    if isinstance(plan, LScan):
        return {"node": "scan", "table": plan.table,
                "schema": plan.schema.to_dict(),
                "projected": list(plan.projected)}
    if isinstance(plan, LFilter):
        return {"node": "filter", "child": plan_to_json(plan.child),
                "predicate": expr_to_json(plan.predicate)}
    if isinstance(plan, LProject):
        return {"node": "project", "child": plan_to_json(plan.child),
                "exprs": [expr_to_json(e) for e in plan.exprs],
                "names": list(plan.names)}
    if isinstance(plan, LAggregate):
        return {"node": "aggregate", "child": plan_to_json(plan.child),
                "keys": [expr_to_json(k) for k in plan.keys],
                "aggs": [agg_to_json(a) for a in plan.aggs]}
    if isinstance(plan, LJoin):
        return {"node": "join",
                "left": plan_to_json(plan.left),
                "right": plan_to_json(plan.right),
                "left_keys": list(plan.left_keys),
                "right_keys": list(plan.right_keys),
                "residual": expr_to_json(plan.residual)
                            if plan.residual is not None else None}
    if isinstance(plan, LCrossJoin):
        return {"node": "cross",
                "left": plan_to_json(plan.left),
                "right": plan_to_json(plan.right)}
    if isinstance(plan, LSort):
        return {"node": "sort", "child": plan_to_json(plan.child),
                "keys": [[c, asc] for c, asc in plan.keys]}
    if isinstance(plan, LLimit):
        return {"node": "limit", "child": plan_to_json(plan.child),
                "limit": plan.limit}
    raise TypeError(type(plan).__name__)


def plan_from_json(d: dict) -> LogicalPlan:
    node = d["node"]
    if node == "scan":
        return LScan(d["table"], TableSchema.from_dict(d["schema"]),
                     tuple(d["projected"]))
    if node == "filter":
        return LFilter(plan_from_json(d["child"]),
                       expr_from_json(d["predicate"]))
    if node == "project":
        return LProject(plan_from_json(d["child"]),
                        tuple(expr_from_json(e) for e in d["exprs"]),
                        tuple(d["names"]))
    if node == "aggregate":
        keys = tuple(expr_from_json(k) for k in d["keys"])
        return LAggregate(plan_from_json(d["child"]),
                          keys,  # type: ignore[arg-type]
                          tuple(agg_from_json(a) for a in d["aggs"]))
    if node == "join":
        residual = expr_from_json(d["residual"]) \
            if d["residual"] is not None else None
        return LJoin(plan_from_json(d["left"]), plan_from_json(d["right"]),
                     tuple(d["left_keys"]), tuple(d["right_keys"]), residual)
    if node == "cross":
        return LCrossJoin(plan_from_json(d["left"]), plan_from_json(d["right"]))
    if node == "sort":
        return LSort(plan_from_json(d["child"]),
                     tuple((c, asc) for c, asc in d["keys"]))
    if node == "limit":
        return LLimit(plan_from_json(d["child"]), d["limit"])
    raise ValueError(f"unknown plan node {node!r}")


def plan_tables(plan: LogicalPlan) -> list[str]:
    """Scan tables in plan order."""
    if isinstance(plan, LScan):
        return [plan.table]
    out: list[str] = []
    for child in plan.children:
        out.extend(plan_tables(child))
    return out


def describe(plan: LogicalPlan, indent: int = 0) -> str:
    """Human-readable tree, one node per line."""
    pad = "  " * indent
    if isinstance(plan, LScan):
        line = f"{pad}Scan {plan.table} [{', '.join(plan.projected)}]"
    elif isinstance(plan, LFilter):
        line = f"{pad}Filter"
    elif isinstance(plan, LProject):
        line = f"{pad}Project [{', '.join(plan.names)}]"
    elif isinstance(plan, LAggregate):
        keys = ", ".join(k.name for k in plan.keys)
        aggs = ", ".join(f"{a.func}({a.alias})" for a in plan.aggs)
        line = f"{pad}Aggregate keys=[{keys}] aggs=[{aggs}]"
    elif isinstance(plan, LJoin):
        pairs = ", ".join(f"{l}={r}" for l, r in
                          zip(plan.left_keys, plan.right_keys))
        line = f"{pad}Join on {pairs}"
    elif isinstance(plan, LCrossJoin):
        line = f"{pad}CrossJoin"
    elif isinstance(plan, LSort):
        keys = ", ".join(c + ("" if asc else " desc") for c, asc in plan.keys)
        line = f"{pad}Sort [{keys}]"
    elif isinstance(plan, LLimit):
        line = f"{pad}Limit {plan.limit}"
    else:
        line = f"{pad}{type(plan).__name__}"
    return "\n".join([line] + [describe(c, indent + 1)
                               for c in plan.children])
