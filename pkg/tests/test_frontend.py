"""Parser, binder, and logical planning over the supported SQL subset."""

import pytest

from skylite.errors import (SqlSyntaxError, TypeMismatch, UngroupedColumn,
                            UnknownColumn, UnknownTable)
from skylite.frontend import ast
from skylite.frontend.binder import (bind, date_to_days, days_to_date,
                                     decimal_lit_parts, shift_date)
from skylite.frontend.parser import parse, tokenize
from skylite.frontend.logical import (BArith, BCase, BCompare, BLiteral,
                                      LAggregate, LFilter, LScan, LSort)
from skylite.bench.queries import Q1, Q6, Q12, TABLE_SCHEMAS
from skylite.formats.catalog import Catalog, TableManifest


@pytest.fixture
def catalog():
    cat = Catalog()
    for name, schema in TABLE_SCHEMAS.items():
        cat.add_table(schema, TableManifest(name, []))
    return cat


def test_tokenizer_basics():
    toks = tokenize("SELECT l_tax, 'it''s' FROM lineitem WHERE a <> 1.5")
    kinds = [t.kind for t in toks]
    assert kinds[0] == "keyword" and toks[0].text == "select"
    assert ("string", "it's") in [(t.kind, t.text) for t in toks]
    assert ("op", "<>") in [(t.kind, t.text) for t in toks]
    assert kinds[-1] == "eof"


def test_tokenizer_rejects_garbage():
    with pytest.raises(SqlSyntaxError):
        tokenize("select ~ from t")


def test_parse_q1_shape():
    stmt = parse(Q1)
    assert stmt.from_tables[0].name == "lineitem"
    assert [i.alias for i in stmt.items][:2] == [None, None]
    assert len(stmt.group_by) == 2
    assert len(stmt.order_by) == 2
    assert stmt.where is not None


def test_parse_q12_join():
    stmt = parse(Q12)
    tables = {t.name for t in stmt.from_tables}
    tables |= {j.table.name for j in stmt.joins}
    assert tables == {"orders", "lineitem"}


def test_parse_errors_carry_position():
    with pytest.raises(SqlSyntaxError) as err:
        parse("select from lineitem")
    assert err.value.position >= 0
    with pytest.raises(SqlSyntaxError):
        parse("select a from lineitem where")


def test_to_sql_roundtrip_on_benchmark_queries():
    for sql in (Q1, Q6, Q12):
        once = ast.to_sql(parse(sql))
        again = ast.to_sql(parse(once))
        assert once == again


def test_date_helpers():
    assert days_to_date(date_to_days("1994-01-01")) == "1994-01-01"
    with pytest.raises(TypeMismatch):
        date_to_days("1994-13-01")
    d = date_to_days("1994-01-01")
    year = ast.IntervalLit(1, "year")
    assert days_to_date(shift_date(d, year, 1)) == "1995-01-01"
    month = ast.IntervalLit(2, "month")
    assert days_to_date(shift_date(d, month, -1)) == "1993-11-01"


def test_decimal_literal_parts():
    assert decimal_lit_parts("1.07") == (107, 2)
    assert decimal_lit_parts("24") == (24, 0)
    assert decimal_lit_parts(".5") == (5, 1)


def test_bind_q6_plan_shape(catalog):
    plan = bind(parse(Q6), catalog)
    assert plan.output_schema.names() == ["revenue"]
    # aggregate over filter over scan
    agg = plan
    while not isinstance(agg, LAggregate):
        agg = agg.child
    assert agg.keys == ()
    assert agg.aggs[0].func == "sum"


def test_bind_decimal_arithmetic_scales(catalog):
    plan = bind(parse(
        "select sum(l_extendedprice * (1 - l_discount)) as x from lineitem"),
        catalog)
    agg = plan
    while not isinstance(agg, LAggregate):
        agg = agg.child
    arg = agg.aggs[0].arg
    assert isinstance(arg, BArith) and arg.op == "*"
    # decimal(15,2) * decimal(?,2) multiplies scales
    assert arg.dtype.kind == "decimal" and arg.dtype.scale == 4


def test_bind_folds_date_interval(catalog):
    plan = bind(parse(
        "select count(*) as n from lineitem where "
        "l_shipdate < date '1994-01-01' + interval '1' year"), catalog)
    node = plan
    while not isinstance(node, LFilter):
        node = node.child
    cmp = node.predicate
    assert isinstance(cmp, BCompare)
    assert isinstance(cmp.right, BLiteral)
    assert cmp.right.value == date_to_days("1995-01-01")


def test_bind_errors(catalog):
    with pytest.raises(UnknownTable):
        bind(parse("select 1 as x from nope"), catalog)
    with pytest.raises(UnknownColumn):
        bind(parse("select zz as x from lineitem"), catalog)
    with pytest.raises(UngroupedColumn):
        bind(parse("select l_tax, count(*) as n from lineitem "
                   "group by l_returnflag"), catalog)
    with pytest.raises(TypeMismatch):
        bind(parse("select count(*) as n from lineitem "
                   "where l_comment > 4"), catalog)


def test_bind_case_type(catalog):
    plan = bind(parse(
        "select sum(case when l_quantity > 10 then 1 else 0 end) as c "
        "from lineitem"), catalog)
    agg = plan
    while not isinstance(agg, LAggregate):
        agg = agg.child
    assert isinstance(agg.aggs[0].arg, BCase)
    assert agg.aggs[0].arg.dtype.kind == "int64"


def test_scan_projection_is_full_before_optimization(catalog):
    plan = bind(parse("select l_tax as t from lineitem"), catalog)
    node = plan
    while not isinstance(node, LScan):
        node = node.child
    assert set(node.projected) == set(node.schema.names())


def test_order_by_binds_output_names(catalog):
    plan = bind(parse("select l_returnflag, count(*) as n from lineitem "
                      "group by l_returnflag order by n desc"), catalog)
    node = plan
    while not isinstance(node, LSort):
        node = node.child
    assert node.keys == (("n", False),)
