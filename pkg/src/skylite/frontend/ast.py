"""Untyped abstract syntax tree for the supported SQL subset, plus the
unparser used by the parse-print-parse fixpoint property."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

AGGREGATE_FUNCS = ("sum", "avg", "count", "min", "max")


class Expr:
    pass


@dataclass(frozen=True)
class ColumnRef(Expr):
    name: str
    table: Optional[str] = None


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class DecimalLit(Expr):
    text: str  # literal text, e.g. "0.05"; scale derives from digits


@dataclass(frozen=True)
class StringLit(Expr):
    value: str


@dataclass(frozen=True)
class DateLit(Expr):
    text: str  # YYYY-MM-DD


@dataclass(frozen=True)
class IntervalLit(Expr):
    value: int
    unit: str  # year | month | day


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str  # + - * / = <> < <= > >= and or
    left: Expr
    right: Expr


@dataclass(frozen=True)
class NotOp(Expr):
    expr: Expr


@dataclass(frozen=True)
class Between(Expr):
    expr: Expr
    low: Expr
    high: Expr


@dataclass(frozen=True)
class InList(Expr):
    expr: Expr
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class CaseWhen(Expr):
    whens: tuple[tuple[Expr, Expr], ...]
    else_: Optional[Expr] = None


@dataclass(frozen=True)
class FuncCall(Expr):
    name: str
    args: tuple[Expr, ...] = ()
    star: bool = False  # count(*)


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: Optional[str] = None


@dataclass(frozen=True)
class TableRef:
    name: str


@dataclass(frozen=True)
class ExplicitJoin:
    table: TableRef
    condition: Expr


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    ascending: bool = True


@dataclass(frozen=True)
class SelectStmt:
    items: tuple[SelectItem, ...]
    from_tables: tuple[TableRef, ...] = ()
    joins: tuple[ExplicitJoin, ...] = ()
    where: Optional[Expr] = None
    group_by: tuple[Expr, ...] = ()
    order_by: tuple[OrderItem, ...] = ()
    limit: Optional[int] = None


Ast = SelectStmt

_PRECEDENCE = {
    "or": 1, "and": 2,
    "=": 4, "<>": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6,
}


def _paren(expr: Expr, parent_prec: int) -> str:
    text = expr_to_sql(expr)
    if isinstance(expr, BinaryOp) and _PRECEDENCE[expr.op] < parent_prec:
        return f"({text})"
    if isinstance(expr, (Between, InList, NotOp)) and parent_prec > 3:
        return f"({text})"
    return text


def expr_to_sql(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return f"{expr.table}.{expr.name}" if expr.table else expr.name
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, DecimalLit):
        return expr.text
    if isinstance(expr, StringLit):
        return "'" + expr.value.replace("'", "''") + "'"
    if isinstance(expr, DateLit):
        return f"date '{expr.text}'"
    if isinstance(expr, IntervalLit):
        return f"interval '{expr.value}' {expr.unit}"
    if isinstance(expr, BinaryOp):
        prec = _PRECEDENCE[expr.op]
        # left-associative: right child needs parens at equal precedence
        left = _paren(expr.left, prec)
        right_text = expr_to_sql(expr.right)
        if isinstance(expr.right, BinaryOp) and \
                _PRECEDENCE[expr.right.op] <= prec:
            right_text = f"({right_text})"
        elif isinstance(expr.right, (Between, InList, NotOp)) and prec > 3:
            right_text = f"({right_text})"
        return f"{left} {expr.op} {right_text}"
    if isinstance(expr, NotOp):
        return f"not {_paren(expr.expr, 3)}"
    if isinstance(expr, Between):
        return (f"{_paren(expr.expr, 5)} between {_paren(expr.low, 5)} "
                f"and {_paren(expr.high, 5)}")
    if isinstance(expr, InList):
        items = ", ".join(expr_to_sql(i) for i in expr.items)
        return f"{_paren(expr.expr, 5)} in ({items})"
    if isinstance(expr, CaseWhen):
        parts = ["case"]
        for cond, result in expr.whens:
            parts.append(f"when {expr_to_sql(cond)} then {expr_to_sql(result)}")
        if expr.else_ is not None:
            parts.append(f"else {expr_to_sql(expr.else_)}")
        parts.append("end")
        return " ".join(parts)
    if isinstance(expr, FuncCall):
        if expr.star:
            return f"{expr.name}(*)"
        return f"{expr.name}({', '.join(expr_to_sql(a) for a in expr.args)})"
    raise TypeError(f"cannot unparse {type(expr).__name__}")


def to_sql(stmt: SelectStmt) -> str:
    parts = ["select"]
    items = []
    for item in stmt.items:
        text = expr_to_sql(item.expr)
        if item.alias:
            text += f" as {item.alias}"
        items.append(text)
    parts.append(", ".join(items))
    if stmt.from_tables:
        parts.append("from")
        parts.append(", ".join(t.name for t in stmt.from_tables))
        for j in stmt.joins:
            parts.append(f"join {j.table.name} on {expr_to_sql(j.condition)}")
    if stmt.where is not None:
        parts.append(f"where {expr_to_sql(stmt.where)}")
    if stmt.group_by:
        parts.append("group by " + ", ".join(expr_to_sql(e)
                                             for e in stmt.group_by))
    if stmt.order_by:
        keys = []
        for o in stmt.order_by:
            keys.append(expr_to_sql(o.expr) + ("" if o.ascending else " desc"))
        parts.append("order by " + ", ".join(keys))
    if stmt.limit is not None:
        parts.append(f"limit {stmt.limit}")
    return " ".join(parts)
