"""Benchmark table schemas and query texts (pricing summary, forecasting
revenue change, and shipping modes / order priority)."""

from __future__ import annotations

from ..formats.schema import DATE, INT64, STRING, Column, TableSchema, decimal

MONEY = decimal(15, 2)

LINEITEM = TableSchema("lineitem", (
    Column("l_orderkey", INT64),
    Column("l_partkey", INT64),
    Column("l_suppkey", INT64),
    Column("l_linenumber", INT64),
    Column("l_quantity", MONEY),
    Column("l_extendedprice", MONEY),
    Column("l_discount", MONEY),
    Column("l_tax", MONEY),
    Column("l_returnflag", STRING),
    Column("l_linestatus", STRING),
    Column("l_shipdate", DATE),
    Column("l_commitdate", DATE),
    Column("l_receiptdate", DATE),
    Column("l_shipinstruct", STRING),
    Column("l_shipmode", STRING),
    Column("l_comment", STRING),
))

ORDERS = TableSchema("orders", (
    Column("o_orderkey", INT64),
    Column("o_custkey", INT64),
    Column("o_orderstatus", STRING),
    Column("o_totalprice", MONEY),
    Column("o_orderdate", DATE),
    Column("o_orderpriority", STRING),
    Column("o_clerk", STRING),
    Column("o_shippriority", INT64),
    Column("o_comment", STRING),
))

TABLE_SCHEMAS = {"lineitem": LINEITEM, "orders": ORDERS}

Q1 = """
select
    l_returnflag,
    l_linestatus,
    sum(l_quantity) as sum_qty,
    sum(l_extendedprice) as sum_base_price,
    sum(l_extendedprice * (1 - l_discount)) as sum_disc_price,
    sum(l_extendedprice * (1 - l_discount) * (1 + l_tax)) as sum_charge,
    avg(l_quantity) as avg_qty,
    avg(l_extendedprice) as avg_price,
    avg(l_discount) as avg_disc,
    count(*) as count_order
from
    lineitem
where
    l_shipdate <= date '1998-12-01' - interval '90' day
group by
    l_returnflag,
    l_linestatus
order by
    l_returnflag,
    l_linestatus
"""

Q6 = """
select
    sum(l_extendedprice * l_discount) as revenue
from
    lineitem
where
    l_shipdate >= date '1994-01-01'
    and l_shipdate < date '1994-01-01' + interval '1' year
    and l_discount between 0.05 and 0.07
    and l_quantity < 24
"""

Q12 = """
select
    l_shipmode,
    sum(case
        when o_orderpriority = '1-URGENT'
            or o_orderpriority = '2-HIGH'
            then 1
        else 0
    end) as high_line_count,
    sum(case
        when o_orderpriority <> '1-URGENT'
            and o_orderpriority <> '2-HIGH'
            then 1
        else 0
    end) as low_line_count
from
    orders,
    lineitem
where
    o_orderkey = l_orderkey
    and l_shipmode in ('MAIL', 'SHIP')
    and l_commitdate < l_receiptdate
    and l_shipdate < l_commitdate
    and l_receiptdate >= date '1994-01-01'
    and l_receiptdate < date '1994-01-01' + interval '1' year
group by
    l_shipmode
order by
    l_shipmode
"""

QUERIES = {1: Q1, 6: Q6, 12: Q12}
