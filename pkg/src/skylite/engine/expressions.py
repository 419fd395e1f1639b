"""Vectorized evaluation of bound expressions over record batches.

Decimals are exact: their underlying int64 representation is manipulated
with integer arithmetic only, and division rounds half-even. Every
evaluation returns (values, validity) where validity is None for
all-valid results."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..errors import TypeMismatch
from ..formats.schema import NUMPY_DTYPES, RecordBatch
from ..frontend.logical import (BArith, BCase, BColumn, BCompare, BExpr, BIn,
                                BLiteral, BLogical, BNot, BScale)

DIV_SCALE = 6

Evaluated = tuple[np.ndarray, Optional[np.ndarray]]


def div_round_half_even(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """Exact int64 division rounded half to even. denom must be nonzero."""
    numer = numer.astype(np.int64)
    denom = denom.astype(np.int64)
    sign = np.where(denom < 0, -1, 1)
    numer = numer * sign
    denom = denom * sign
    q = numer // denom
    r = numer - q * denom
    twice = 2 * r
    round_up = (twice > denom) | ((twice == denom) & (q % 2 != 0))
    return q + round_up.astype(np.int64)


def _combine_masks(*masks: Optional[np.ndarray]) -> Optional[np.ndarray]:
    present = [m for m in masks if m is not None]
    if not present:
        return None
    out = present[0].copy()
    for m in present[1:]:
        out &= m
    return out


def truthy(values: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    """Boolean selection vector: null predicates select nothing."""
    if mask is None:
        return values.astype(bool, copy=False)
    return values.astype(bool, copy=False) & mask


def evaluate(expr: BExpr, batch: RecordBatch) -> Evaluated:
    n = batch.row_count
    if isinstance(expr, BColumn):
        idx = batch.schema.index(expr.name)
        return batch.columns[idx], batch.validity[idx]
    if isinstance(expr, BLiteral):
        np_dtype = NUMPY_DTYPES[expr.dtype.kind]
        if expr.value is None:
            return (np.zeros(n, dtype=np_dtype),
                    np.zeros(n, dtype=bool))
        return np.full(n, expr.value, dtype=np_dtype), None
    if isinstance(expr, BScale):
        values, mask = evaluate(expr.expr, batch)
        return values * np.int64(10) ** expr.delta, mask
    if isinstance(expr, BArith):
        return _eval_arith(expr, batch)
    if isinstance(expr, BCompare):
        lv, lm = evaluate(expr.left, batch)
        rv, rm = evaluate(expr.right, batch)
        op = expr.op
        if op == "=":
            out = lv == rv
        elif op == "<>":
            out = lv != rv
        elif op == "<":
            out = lv < rv
        elif op == "<=":
            out = lv <= rv
        elif op == ">":
            out = lv > rv
        else:
            out = lv >= rv
        return np.asarray(out, dtype=bool), _combine_masks(lm, rm)
    if isinstance(expr, BLogical):
        parts = [truthy(*evaluate(a, batch)) for a in expr.args]
        out = parts[0].copy()
        for p in parts[1:]:
            if expr.op == "and":
                out &= p
            else:
                out |= p
        return out, None
    if isinstance(expr, BNot):
        return ~truthy(*evaluate(expr.expr, batch)), None
    if isinstance(expr, BIn):
        values, mask = evaluate(expr.expr, batch)
        choices = [i.value for i in expr.items]
        out = np.isin(values, choices)
        return out, mask
    if isinstance(expr, BCase):
        return _eval_case(expr, batch, n)
    raise TypeMismatch(f"cannot evaluate {type(expr).__name__}")


def _eval_arith(expr: BArith, batch: RecordBatch) -> Evaluated:
    lv, lm = evaluate(expr.left, batch)
    rv, rm = evaluate(expr.right, batch)
    mask = _combine_masks(lm, rm)
    if expr.dtype.kind == "float64":
        lv = lv.astype(np.float64, copy=False)
        rv = rv.astype(np.float64, copy=False)
        if expr.op == "+":
            return lv + rv, mask
        if expr.op == "-":
            return lv - rv, mask
        if expr.op == "*":
            return lv * rv, mask
        safe = np.where(rv == 0, 1.0, rv)
        zero = rv == 0
        out = lv / safe
        if zero.any():
            mask = _combine_masks(mask, ~zero)
        return out, mask
    # int64 and decimal: exact integer arithmetic
    if expr.op == "+":
        return lv + rv, mask
    if expr.op == "-":
        return lv - rv, mask
    if expr.op == "*":
        return lv * rv, mask
    # decimal division to scale DIV_SCALE, half-even
    ls = expr.left.dtype.scale if expr.left.dtype.kind == "decimal" else 0
    rs = expr.right.dtype.scale if expr.right.dtype.kind == "decimal" else 0
    shift = DIV_SCALE + rs - ls
    numer = lv.astype(np.int64)
    denom = rv.astype(np.int64)
    if shift >= 0:
        numer = numer * np.int64(10) ** shift
    else:
        denom = denom * np.int64(10) ** (-shift)
    zero = denom == 0
    if zero.any():
        denom = np.where(zero, 1, denom)
        mask = _combine_masks(mask, ~zero)
    return div_round_half_even(numer, denom), mask


def _eval_case(expr: BCase, batch: RecordBatch, n: int) -> Evaluated:
    conds = []
    choices = []
    choice_masks = []
    for cond, result in expr.whens:
        conds.append(truthy(*evaluate(cond, batch)))
        v, m = evaluate(result, batch)
        choices.append(v)
        choice_masks.append(m)
    else_v, else_m = evaluate(expr.else_, batch)
    out = np.select(conds, choices, default=else_v)
    if all(m is None for m in choice_masks) and else_m is None:
        return out, None
    ones = np.ones(n, dtype=bool)
    masks = [m if m is not None else ones for m in choice_masks]
    default_mask = else_m if else_m is not None else ones
    return out, np.select(conds, masks, default=default_mask).astype(bool)
