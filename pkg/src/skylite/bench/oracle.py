"""Reference evaluator: runs a bound logical plan row by row in plain
Python. Shares only the frontend (parse/bind/optimize) and the file
reader with the engine; all arithmetic, grouping, joining, and rounding
is written independently so the two implementations cross-check each
other."""

from __future__ import annotations

from typing import Any, Optional

from ..formats.catalog import Catalog
from ..formats.io_handlers import read_object_batches
from ..frontend.binder import bind
from ..frontend.logical import (AggExpr, BArith, BCase, BColumn, BCompare,
                                BExpr, BIn, BLiteral, BLogical, BNot, BScale,
                                LAggregate, LCrossJoin, LFilter, LJoin,
                                LLimit, LogicalPlan, LProject, LScan, LSort)
from ..frontend.parser import parse
from ..planner.rules import optimize
from ..sim.simulator import Simulator

Row = dict[str, Any]

AVG_SCALE = 6
DIV_SCALE = 6


def load_table(sim: Simulator, catalog: Catalog, name: str) -> list[Row]:
    """Read a table's objects back into python rows (input acquisition
    only; no engine operators are involved)."""
    schema, manifest = catalog.resolve(name)
    ctx = sim.new_context("oracle-loader")
    names = [c.name for c in schema.columns]
    rows: list[Row] = []
    for obj in manifest.objects:
        for batch in read_object_batches(ctx, sim.store, obj.bucket,
                                         obj.key):
            cols = [c.tolist() for c in batch.columns]
            for tup in zip(*cols):
                rows.append(dict(zip(names, tup)))
    return rows


def run_oracle(sql: str, catalog: Catalog,
               tables: dict[str, list[Row]]) -> list[Row]:
    plan = optimize(bind(parse(sql), catalog), catalog)
    names = [c.name for c in plan.output_schema.columns]
    return [{n: row[n] for n in names}
            for row in _eval_plan(plan, tables)]


# --- rounding (independent of the engine's implementation) ---

def _half_even(numer: int, denom: int) -> int:
    if denom < 0:
        numer, denom = -numer, -denom
    q, r = divmod(numer, denom)
    if 2 * r > denom or (2 * r == denom and q % 2 == 1):
        q += 1
    return q


# --- expression evaluation over one row; None is SQL null ---

def _eval(expr: BExpr, row: Row) -> Any:
    if isinstance(expr, BColumn):
        return row[expr.name]
    if isinstance(expr, BLiteral):
        return expr.value
    if isinstance(expr, BScale):
        v = _eval(expr.expr, row)
        return None if v is None else v * 10 ** expr.delta
    if isinstance(expr, BArith):
        return _eval_arith(expr, row)
    if isinstance(expr, BCompare):
        lv = _eval(expr.left, row)
        rv = _eval(expr.right, row)
        if lv is None or rv is None:
            return None
        return {"=": lv == rv, "<>": lv != rv, "<": lv < rv,
                "<=": lv <= rv, ">": lv > rv, ">=": lv >= rv}[expr.op]
    if isinstance(expr, BLogical):
        values = [_truthy(_eval(a, row)) for a in expr.args]
        return all(values) if expr.op == "and" else any(values)
    if isinstance(expr, BNot):
        return not _truthy(_eval(expr.expr, row))
    if isinstance(expr, BIn):
        v = _eval(expr.expr, row)
        if v is None:
            return None
        return any(v == item.value for item in expr.items)
    if isinstance(expr, BCase):
        for cond, result in expr.whens:
            if _truthy(_eval(cond, row)):
                return _eval(result, row)
        return _eval(expr.else_, row) if expr.else_ is not None else None
    raise TypeError(type(expr).__name__)


def _truthy(v: Any) -> bool:
    return bool(v) if v is not None else False


def _eval_arith(expr: BArith, row: Row) -> Any:
    lv = _eval(expr.left, row)
    rv = _eval(expr.right, row)
    if lv is None or rv is None:
        return None
    if expr.dtype.kind == "float64":
        if expr.op == "+":
            return lv + rv
        if expr.op == "-":
            return lv - rv
        if expr.op == "*":
            return lv * rv
        return lv / rv if rv != 0 else None
    if expr.op == "+":
        return lv + rv
    if expr.op == "-":
        return lv - rv
    if expr.op == "*":
        return lv * rv
    ls = expr.left.dtype.scale if expr.left.dtype.kind == "decimal" else 0
    rs = expr.right.dtype.scale if expr.right.dtype.kind == "decimal" else 0
    if rv == 0:
        return None
    shift = DIV_SCALE + rs - ls
    if shift >= 0:
        return _half_even(lv * 10 ** shift, rv)
    return _half_even(lv, rv * 10 ** (-shift))


# --- plan evaluation ---

def _eval_plan(plan: LogicalPlan,
               tables: dict[str, list[Row]]) -> list[Row]:
    if isinstance(plan, LScan):
        return [{n: row[n] for n in plan.projected}
                for row in tables[plan.table]]
    if isinstance(plan, LFilter):
        rows = _eval_plan(plan.child, tables)
        return [r for r in rows if _truthy(_eval(plan.predicate, r))]
    if isinstance(plan, LProject):
        rows = _eval_plan(plan.child, tables)
        return [{n: _eval(e, r) for n, e in zip(plan.names, plan.exprs)}
                for r in rows]
    if isinstance(plan, LJoin):
        return _eval_join(plan, tables)
    if isinstance(plan, LCrossJoin):
        left = _eval_plan(plan.left, tables)
        right = _eval_plan(plan.right, tables)
        return [{**lr, **rr} for lr in left for rr in right]
    if isinstance(plan, LAggregate):
        return _eval_aggregate(plan, tables)
    if isinstance(plan, LSort):
        rows = _eval_plan(plan.child, tables)
        for name, ascending in reversed(plan.keys):
            rows = sorted(rows, key=lambda r: r[name], reverse=not ascending)
        return rows
    if isinstance(plan, LLimit):
        return _eval_plan(plan.child, tables)[:plan.limit]
    raise TypeError(type(plan).__name__)


def _eval_join(plan: LJoin, tables: dict[str, list[Row]]) -> list[Row]:
    left = _eval_plan(plan.left, tables)
    right = _eval_plan(plan.right, tables)
    index: dict[tuple, list[Row]] = {}
    for rr in right:
        index.setdefault(tuple(rr[k] for k in plan.right_keys),
                         []).append(rr)
    out = []
    for lr in left:
        for rr in index.get(tuple(lr[k] for k in plan.left_keys), ()):
            joined = {**lr, **rr}
            if plan.residual is None or \
                    _truthy(_eval(plan.residual, joined)):
                out.append(joined)
    return out


def _eval_aggregate(plan: LAggregate,
                    tables: dict[str, list[Row]]) -> list[Row]:
    rows = _eval_plan(plan.child, tables)
    key_names = [k.name for k in plan.keys]
    groups: dict[tuple, list[Row]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in key_names), []).append(r)
    if not plan.keys and not groups:
        groups[()] = []
    out = []
    for key in sorted(groups):
        members = groups[key]
        row: Row = dict(zip(key_names, key))
        for agg in plan.aggs:
            row[agg.alias] = _finalize(agg, members)
        out.append(row)
    return out


def _finalize(agg: AggExpr, members: list[Row]) -> Any:
    if agg.func == "count":
        if agg.arg is None:
            return len(members)
        return sum(1 for r in members if _eval(agg.arg, r) is not None)
    values = [v for r in members
              if (v := _eval(agg.arg, r)) is not None]
    if not values:
        return None
    if agg.func == "sum":
        return sum(values)
    if agg.func == "min":
        return min(values)
    if agg.func == "max":
        return max(values)
    # avg
    if agg.dtype.kind == "float64":
        return sum(values) / len(values)
    in_scale = agg.arg.dtype.scale if agg.arg.dtype.kind == "decimal" else 0
    total = sum(values)
    shift = AVG_SCALE - in_scale
    if shift >= 0:
        return _half_even(total * 10 ** shift, len(values))
    return _half_even(total, len(values) * 10 ** (-shift))


def rows_from_batch(batch) -> list[Row]:
    """Engine result batch -> oracle-style rows (validity becomes None)."""
    names = [c.name for c in batch.schema.columns]
    cols = [c.tolist() for c in batch.columns]
    masks = [m.tolist() if m is not None else None for m in batch.validity]
    out = []
    for i in range(batch.row_count):
        out.append({n: (cols[j][i]
                        if masks[j] is None or masks[j][i] else None)
                    for j, n in enumerate(names)})
    return out
