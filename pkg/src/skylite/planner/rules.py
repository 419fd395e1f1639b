"""Rule-based logical optimization: constant folding, predicate pushdown
(with equi-join extraction from cross joins), join input ordering by
estimated bytes, and projection pruning. Runs to a fixpoint and is
idempotent: optimizing an optimized plan returns it unchanged."""

from __future__ import annotations

from typing import Optional

from ..formats.catalog import Catalog
from ..formats.schema import BOOL, TableSchema
from ..frontend.logical import (BColumn, BCompare, BExpr, BLiteral, BLogical,
                                BNot, LAggregate, LCrossJoin, LFilter, LJoin,
                                LLimit, LogicalPlan, LProject, LScan, LSort,
                                expr_columns)

# rough per-value widths used for byte estimates; strings dominate
_STRING_WIDTH = 16
_FIXED_WIDTH = 8


def column_width(dtype) -> int:
    return _STRING_WIDTH if dtype.kind == "string" else _FIXED_WIDTH


def schema_width(schema: TableSchema) -> int:
    return sum(column_width(c.dtype) for c in schema.columns)


def estimate_bytes(plan: LogicalPlan, catalog: Catalog) -> int:
    """Byte estimate from manifests, scaled by projected column widths.
    No cardinality estimation: filters do not shrink the estimate."""
    if isinstance(plan, LScan):
        _, manifest = catalog.resolve(plan.table)
        full = schema_width(plan.schema)
        kept = schema_width(plan.output_schema)
        if full == 0 or manifest.total_bytes == 0:
            return 0
        return max(1, manifest.total_bytes * kept // full)
    if isinstance(plan, (LJoin, LCrossJoin)):
        return estimate_bytes(plan.left, catalog) + \
            estimate_bytes(plan.right, catalog)
    return estimate_bytes(plan.children[0], catalog)


# --- constant folding ---

def _fold_expr(expr: BExpr) -> BExpr:
    if isinstance(expr, BCompare):
        left = _fold_expr(expr.left)
        right = _fold_expr(expr.right)
        if isinstance(left, BLiteral) and isinstance(right, BLiteral) \
                and left.value is not None and right.value is not None:
            a, b = left.value, right.value
            result = {"=": a == b, "<>": a != b, "<": a < b, "<=": a <= b,
                      ">": a > b, ">=": a >= b}[expr.op]
            return BLiteral(result, BOOL)
        return BCompare(expr.op, left, right)
    if isinstance(expr, BNot):
        inner = _fold_expr(expr.expr)
        if isinstance(inner, BLiteral) and isinstance(inner.value, bool):
            return BLiteral(not inner.value, BOOL)
        return BNot(inner)
    if isinstance(expr, BLogical):
        args = []
        for a in expr.args:
            a = _fold_expr(a)
            if isinstance(a, BLiteral) and isinstance(a.value, bool):
                if expr.op == "and" and a.value:
                    continue  # true conjunct drops out
                if expr.op == "or" and not a.value:
                    continue
                return BLiteral(a.value, BOOL)  # short circuit
            if isinstance(a, BLogical) and a.op == expr.op:
                args.extend(a.args)
            else:
                args.append(a)
        if not args:
            return BLiteral(expr.op == "and", BOOL)
        if len(args) == 1:
            return args[0]
        return BLogical(expr.op, tuple(args))
    return expr


# --- predicate pushdown ---

def split_conjuncts(pred: BExpr) -> list[BExpr]:
    if isinstance(pred, BLogical) and pred.op == "and":
        out = []
        for a in pred.args:
            out.extend(split_conjuncts(a))
        return out
    return [pred]


def combine_conjuncts(conjuncts: list[BExpr]) -> Optional[BExpr]:
    if not conjuncts:
        return None
    if len(conjuncts) == 1:
        return conjuncts[0]
    return BLogical("and", tuple(conjuncts))


def _equi_join_pair(c: BExpr, left_cols: set[str],
                    right_cols: set[str]) -> Optional[tuple[str, str]]:
    if not (isinstance(c, BCompare) and c.op == "="
            and isinstance(c.left, BColumn)
            and isinstance(c.right, BColumn)):
        return None
    a, b = c.left.name, c.right.name
    if a in left_cols and b in right_cols:
        return a, b
    if b in left_cols and a in right_cols:
        return b, a
    return None


def _push_filter(pred: BExpr, child: LogicalPlan) -> LogicalPlan:
    """Push a predicate as deep as legal, converting cross joins whose
    conjuncts include a cross-side equality into equi-joins."""
    conjuncts = split_conjuncts(pred)

    if isinstance(child, (LCrossJoin, LJoin)):
        left_cols = set(child.left.output_schema.names())
        right_cols = set(child.right.output_schema.names())
        left_side, right_side, join_pairs, residual = [], [], [], []
        for c in conjuncts:
            cols = expr_columns(c)
            if cols <= left_cols:
                left_side.append(c)
            elif cols <= right_cols:
                right_side.append(c)
            else:
                pair = _equi_join_pair(c, left_cols, right_cols)
                if pair is not None:
                    join_pairs.append(pair)
                else:
                    residual.append(c)
        left = child.left
        right = child.right
        if left_side:
            left = _push_filter(combine_conjuncts(left_side), left)
        if right_side:
            right = _push_filter(combine_conjuncts(right_side), right)
        if isinstance(child, LJoin):
            res = residual + ([child.residual]
                              if child.residual is not None else [])
            new = LJoin(left, right,
                        child.left_keys + tuple(p[0] for p in join_pairs),
                        child.right_keys + tuple(p[1] for p in join_pairs),
                        combine_conjuncts(res))
            return new
        if join_pairs:
            return LJoin(left, right,
                         tuple(p[0] for p in join_pairs),
                         tuple(p[1] for p in join_pairs),
                         combine_conjuncts(residual))
        rebuilt: LogicalPlan = LCrossJoin(left, right)
        if residual:
            rebuilt = LFilter(rebuilt, combine_conjuncts(residual))
        return rebuilt

    if isinstance(child, LFilter):
        merged = combine_conjuncts(conjuncts +
                                   split_conjuncts(child.predicate))
        return _push_filter(merged, child.child)

    return LFilter(child, pred)


def _pushdown(plan: LogicalPlan) -> LogicalPlan:
    if isinstance(plan, LScan):
        return plan
    if isinstance(plan, LFilter):
        return _push_filter(plan.predicate, _pushdown(plan.child))
    if isinstance(plan, LProject):
        return LProject(_pushdown(plan.child), plan.exprs, plan.names)
    if isinstance(plan, LAggregate):
        return LAggregate(_pushdown(plan.child), plan.keys, plan.aggs)
    if isinstance(plan, LJoin):
        return LJoin(_pushdown(plan.left), _pushdown(plan.right),
                     plan.left_keys, plan.right_keys, plan.residual)
    if isinstance(plan, LCrossJoin):
        return LCrossJoin(_pushdown(plan.left), _pushdown(plan.right))
    if isinstance(plan, LSort):
        return LSort(_pushdown(plan.child), plan.keys)
    if isinstance(plan, LLimit):
        return LLimit(_pushdown(plan.child), plan.limit)
    raise TypeError(type(plan).__name__)


def _fold_plan(plan: LogicalPlan) -> LogicalPlan:
    if isinstance(plan, LScan):
        return plan
    if isinstance(plan, LFilter):
        pred = _fold_expr(plan.predicate)
        child = _fold_plan(plan.child)
        if isinstance(pred, BLiteral) and pred.value is True:
            return child
        return LFilter(child, pred)
    if isinstance(plan, LProject):
        return LProject(_fold_plan(plan.child),
                        tuple(_fold_expr(e) for e in plan.exprs), plan.names)
    if isinstance(plan, LAggregate):
        return LAggregate(_fold_plan(plan.child), plan.keys, plan.aggs)
    if isinstance(plan, LJoin):
        residual = _fold_expr(plan.residual) \
            if plan.residual is not None else None
        if isinstance(residual, BLiteral) and residual.value is True:
            residual = None
        return LJoin(_fold_plan(plan.left), _fold_plan(plan.right),
                     plan.left_keys, plan.right_keys, residual)
    if isinstance(plan, LCrossJoin):
        return LCrossJoin(_fold_plan(plan.left), _fold_plan(plan.right))
    if isinstance(plan, LSort):
        return LSort(_fold_plan(plan.child), plan.keys)
    if isinstance(plan, LLimit):
        return LLimit(_fold_plan(plan.child), plan.limit)
    raise TypeError(type(plan).__name__)


# --- join ordering ---

def _order_joins(plan: LogicalPlan, catalog: Catalog) -> LogicalPlan:
    if isinstance(plan, LScan):
        return plan
    if isinstance(plan, LJoin):
        left = _order_joins(plan.left, catalog)
        right = _order_joins(plan.right, catalog)
        # smaller estimated side becomes the right (build) input
        if estimate_bytes(left, catalog) < estimate_bytes(right, catalog):
            return LJoin(right, left, plan.right_keys, plan.left_keys,
                         plan.residual)
        return LJoin(left, right, plan.left_keys, plan.right_keys,
                     plan.residual)
    if isinstance(plan, LFilter):
        return LFilter(_order_joins(plan.child, catalog), plan.predicate)
    if isinstance(plan, LProject):
        return LProject(_order_joins(plan.child, catalog), plan.exprs,
                        plan.names)
    if isinstance(plan, LAggregate):
        return LAggregate(_order_joins(plan.child, catalog), plan.keys,
                          plan.aggs)
    if isinstance(plan, LCrossJoin):
        return LCrossJoin(_order_joins(plan.left, catalog),
                          _order_joins(plan.right, catalog))
    if isinstance(plan, LSort):
        return LSort(_order_joins(plan.child, catalog), plan.keys)
    if isinstance(plan, LLimit):
        return LLimit(_order_joins(plan.child, catalog), plan.limit)
    raise TypeError(type(plan).__name__)


# --- projection pruning ---

def _prune(plan: LogicalPlan, required: Optional[set[str]]) -> LogicalPlan:
    """Restrict every LScan to the columns actually referenced above it.
    required=None means the parent needs every output column."""
    if isinstance(plan, LScan):
        if required is None:
            return plan
        keep = tuple(n for n in plan.schema.names() if n in required)
        if not keep:  # keep one column so row counts survive
            keep = (plan.schema.names()[0],)
        return LScan(plan.table, plan.schema, keep)
    if isinstance(plan, LFilter):
        need = None if required is None else \
            required | expr_columns(plan.predicate)
        return LFilter(_prune(plan.child, need), plan.predicate)
    if isinstance(plan, LProject):
        need: set[str] = set()
        for e in plan.exprs:
            need |= expr_columns(e)
        return LProject(_prune(plan.child, need), plan.exprs, plan.names)
    if isinstance(plan, LAggregate):
        need = {k.name for k in plan.keys}
        for a in plan.aggs:
            if a.arg is not None:
                need |= expr_columns(a.arg)
        return LAggregate(_prune(plan.child, need), plan.keys, plan.aggs)
    if isinstance(plan, LJoin):
        need = set(plan.left_keys) | set(plan.right_keys)
        if required is not None:
            need |= required
        if plan.residual is not None:
            need |= expr_columns(plan.residual)
        left_cols = set(plan.left.output_schema.names())
        right_cols = set(plan.right.output_schema.names())
        left_need = None if required is None else need & left_cols
        right_need = None if required is None else need & right_cols
        if required is None:
            left_need = left_cols | (need & left_cols)
            right_need = right_cols | (need & right_cols)
        return LJoin(_prune(plan.left, left_need),
                     _prune(plan.right, right_need),
                     plan.left_keys, plan.right_keys, plan.residual)
    if isinstance(plan, LCrossJoin):
        if required is None:
            return LCrossJoin(_prune(plan.left, None),
                              _prune(plan.right, None))
        left_cols = set(plan.left.output_schema.names())
        right_cols = set(plan.right.output_schema.names())
        return LCrossJoin(_prune(plan.left, required & left_cols),
                          _prune(plan.right, required & right_cols))
    if isinstance(plan, LSort):
        need = None if required is None else \
            required | {c for c, _ in plan.keys}
        return LSort(_prune(plan.child, need), plan.keys)
    if isinstance(plan, LLimit):
        return LLimit(_prune(plan.child, required), plan.limit)
    raise TypeError(type(plan).__name__)


def optimize(plan: LogicalPlan, catalog: Catalog) -> LogicalPlan:
    """Fixpoint of the rule set; deterministic and idempotent."""
    previous = None
    current = plan
    while current != previous:
        previous = current
        current = _fold_plan(current)
        current = _pushdown(current)
        current = _order_joins(current, catalog)
        current = _prune(current, None)
    return current
