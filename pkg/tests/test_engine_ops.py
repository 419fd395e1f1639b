"""Expression evaluation, hashing, and the operator kernels."""

import numpy as np
import pytest

from skylite.engine.expressions import (div_round_half_even, evaluate,
                                        truthy)
from skylite.engine.hashing import (fnv1a64, hash_column, hash_rows,
                                    partition_rows, splitmix64)
from skylite.engine.operators import (CollectSink, FilterOp, FinalAggOp,
                                      HashJoinOp, LimitOp, PartialAggOp,
                                      SortOp, compile_chain)
from skylite.errors import OutOfBudget
from skylite.formats.schema import (Column, INT64, STRING, TableSchema,
                                    batch_from_arrays, decimal)
from skylite.frontend.logical import (AggExpr, BArith, BColumn, BCompare,
                                      BIn, BLiteral, BLogical, BNot)
from skylite.planner.physical import (PFilter, PFinalAgg, PHashJoin, PLimit,
                                      PPartialAgg, PSort)

DEC2 = decimal(15, 2)
T = TableSchema("t", (Column("g", STRING), Column("x", INT64),
                      Column("d", DEC2),
                      Column("n", INT64, nullable=True)))


def batch(g, x, d, n, n_valid=None):
    validity = [None, None, None,
                np.array(n_valid, dtype=bool) if n_valid else None]
    return batch_from_arrays(T, [np.array(g, dtype=object), x, d, n],
                             validity=validity)


SAMPLE = batch(["a", "b", "a", "c"], [1, 2, 3, 4], [100, 250, 300, 475],
               [7, 0, 9, 0], n_valid=[1, 0, 1, 0])


def col(name, dtype=INT64):
    return BColumn(name, dtype)


# -- expressions --

def test_div_round_half_even_matches_python():
    numer = np.array([5, 15, 25, -5, -15, 7, 1], dtype=np.int64)
    denom = np.array([10, 10, 10, 10, 10, 2, 3], dtype=np.int64)
    want = [round(a / b) if a * 2 != -(b) else 0
            for a, b in zip(numer.tolist(), denom.tolist())]
    # spot-check the bankers cases explicitly
    got = div_round_half_even(numer, denom).tolist()
    assert got[:5] == [0, 2, 2, 0, -2]
    assert got[5] == 4  # 3.5 -> 4
    assert got[6] == 0  # 1/3 -> 0
    del want


def test_evaluate_literals_and_columns():
    vals, mask = evaluate(col("x"), SAMPLE)
    assert vals.tolist() == [1, 2, 3, 4] and mask is None
    vals, mask = evaluate(BLiteral(9, INT64), SAMPLE)
    assert vals.tolist() == [9] * 4
    vals, mask = evaluate(BLiteral(None, INT64), SAMPLE)
    assert mask.tolist() == [False] * 4


def test_evaluate_arith_and_compare():
    expr = BArith("+", col("x"), BLiteral(10, INT64), INT64)
    assert evaluate(expr, SAMPLE)[0].tolist() == [11, 12, 13, 14]
    cmp = BCompare(">", col("x"), BLiteral(2, INT64))
    assert evaluate(cmp, SAMPLE)[0].tolist() == [False, False, True, True]


def test_decimal_division_scale():
    # d / x at scale 2 over 0 -> scale 6 half-even
    expr = BArith("/", col("d", DEC2), col("x"), decimal(18, 6))
    vals, _ = evaluate(expr, SAMPLE)
    assert vals.tolist() == [1_000_000, 1_250_000, 1_000_000, 1_187_500]


def test_division_by_zero_yields_null():
    z = batch(["a"], [0], [100], [1])
    expr = BArith("/", col("d", DEC2), col("x"), decimal(18, 6))
    vals, mask = evaluate(expr, z)
    assert mask.tolist() == [False]


def test_null_propagation_through_compare():
    cmp = BCompare(">", col("n"), BLiteral(1, INT64))
    vals, mask = evaluate(cmp, SAMPLE)
    assert mask.tolist() == [True, False, True, False]
    assert truthy(vals, mask).tolist() == [True, False, True, False]


def test_logical_and_not_in():
    a = BCompare(">", col("x"), BLiteral(1, INT64))
    b = BCompare("<", col("x"), BLiteral(4, INT64))
    both = BLogical("and", (a, b))
    assert evaluate(both, SAMPLE)[0].tolist() == [False, True, True, False]
    neither = BNot(BLogical("or", (a, b)))
    assert evaluate(neither, SAMPLE)[0].tolist() == [False] * 4
    member = BIn(BColumn("g", STRING), (BLiteral("a", STRING),
                                        BLiteral("c", STRING)))
    assert evaluate(member, SAMPLE)[0].tolist() == [True, False, True, True]


# -- hashing --

def test_splitmix_is_a_bijection_sample():
    vals = np.arange(10_000, dtype=np.int64).view(np.uint64)
    hashed = splitmix64(vals)
    assert len(np.unique(hashed)) == 10_000


def test_fnv_and_column_hash_determinism():
    assert fnv1a64("abc") == fnv1a64("abc")
    assert fnv1a64("abc") != fnv1a64("abd")
    strings = np.array(["x", "y", "x"], dtype=object)
    h = hash_column(strings)
    assert h[0] == h[2] and h[0] != h[1]


def test_partition_rows_is_stable_and_complete():
    r = np.random.default_rng(0)
    keys = [r.integers(0, 100, 5000), r.integers(0, 3, 5000)]
    parts = partition_rows(keys, 16)
    assert parts.min() >= 0 and parts.max() < 16
    again = partition_rows(keys, 16)
    np.testing.assert_array_equal(parts, again)
    # equal keys land in equal partitions
    h = hash_rows(keys)
    same = (keys[0][:-1] == keys[0][1:]) & (keys[1][:-1] == keys[1][1:])
    np.testing.assert_array_equal(parts[:-1][same], parts[1:][same])


# -- operator kernels --

def run_chain(ops, schema, batches, build=None, memory_budget=None):
    sink = CollectSink(ops and _out_schema(ops, schema) or schema)
    kwargs = {"build": build}
    if memory_budget is not None:
        kwargs["memory_budget"] = memory_budget
    head = compile_chain(tuple(ops), schema, sink, **kwargs)
    for b in batches:
        head.push(b)
    head.finish()
    return sink.result()


def _out_schema(ops, schema):
    from skylite.planner.physical import chain_output_schema
    return chain_output_schema(list(ops), schema)


def test_filter_op():
    pred = BCompare(">=", col("x"), BLiteral(3, INT64))
    out = run_chain([PFilter(pred)], T, [SAMPLE])
    assert out.column("x").tolist() == [3, 4]


def test_partial_then_final_agg_equals_single_pass():
    aggs = (AggExpr("sum", col("x"), INT64, "s"),
            AggExpr("count", None, INT64, "c"),
            AggExpr("avg", BColumn("d", DEC2), decimal(18, 6), "a"),
            AggExpr("min", col("n"), INT64, "lo"))
    keys = (BColumn("g", STRING),)
    partial = PPartialAgg(keys, aggs)
    final = PFinalAgg(keys, aggs)

    whole = run_chain([partial, final], T, [SAMPLE])
    split = [SAMPLE.slice(0, 2), SAMPLE.slice(2, 4)]
    p0 = run_chain([partial], T, [split[0]])
    p1 = run_chain([partial], T, [split[1]])
    merged = run_chain([final], _out_schema([partial], T), [p0, p1])

    assert whole.column("g").tolist() == merged.column("g").tolist()
    for name in ("s", "c", "a", "lo"):
        assert whole.column(name).tolist() == merged.column(name).tolist()
    # spot check the math: group a has x 1+3, d avg (1.00+3.00)/2
    i = whole.column("g").tolist().index("a")
    assert whole.column("s")[i] == 4
    assert whole.column("a")[i] == 2_000_000  # 2.000000 at scale 6


def test_global_agg_with_no_rows():
    aggs = (AggExpr("count", None, INT64, "c"),
            AggExpr("sum", col("x"), INT64, "s"))
    partial = PPartialAgg((), aggs)
    final = PFinalAgg((), aggs)
    empty = SAMPLE.slice(0, 0)
    out = run_chain([partial, final], T, [empty])
    assert out.row_count == 1
    assert out.column("c").tolist() == [0]
    assert out.validity[out.schema.index("s")].tolist() == [False]


def test_hash_join_matches_bruteforce():
    left = TableSchema("l", (Column("k", INT64), Column("v", INT64)))
    right = TableSchema("r", (Column("k2", INT64), Column("w", INT64)))
    r = np.random.default_rng(5)
    lb = batch_from_arrays(left, [r.integers(0, 8, 40),
                                  r.integers(0, 100, 40)])
    rb = batch_from_arrays(right, [r.integers(0, 8, 10),
                                   r.integers(0, 100, 10)])
    op = PHashJoin("broadcast", ("k",), ("k2",), None, right)
    out = run_chain([op], left, [lb], build=rb)
    want = sorted((lk, lv, rk, rw)
                  for lk, lv in zip(*(c.tolist() for c in lb.columns))
                  for rk, rw in zip(*(c.tolist() for c in rb.columns))
                  if lk == rk)
    got = sorted(zip(*(c.tolist() for c in out.columns)))
    assert got == want


def test_sort_and_limit():
    ops = [PSort((("x", False),)), PLimit(2)]
    out = run_chain(ops, T, [SAMPLE])
    assert out.column("x").tolist() == [4, 3]


def test_sort_multi_key_stability():
    data = batch(["b", "a", "b", "a"], [1, 1, 2, 2], [0, 0, 0, 0],
                 [0, 0, 0, 0])
    out = run_chain([PSort((("g", True), ("x", False)))], T, [data])
    assert out.column("g").tolist() == ["a", "a", "b", "b"]
    assert out.column("x").tolist() == [2, 1, 2, 1]


def test_memory_budget_signals_skew():
    aggs = (AggExpr("count", None, INT64, "c"),)
    partial = PPartialAgg((BColumn("g", STRING),), aggs)
    big = batch(["g"] * 4096, np.zeros(4096, dtype=np.int64),
                np.zeros(4096, dtype=np.int64),
                np.zeros(4096, dtype=np.int64))
    with pytest.raises(OutOfBudget):
        run_chain([partial], T, [big] * 4, memory_budget=1000)
