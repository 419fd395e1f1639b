"""Name resolution and type checking: AST plus catalog -> logical plan.

Numeric rules: integers promote to decimals, decimals align to the wider
scale, add/sub keep the max scale, mul adds scales, and division always
yields decimal(18, 6). Date +/- interval is folded to a plain date literal
during binding, so workers never see calendar arithmetic.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass
from typing import Optional, Union

from ..errors import (NotSupported, TypeMismatch, UngroupedColumn,
                      UnknownColumn, UnknownTable)
from ..formats.catalog import Catalog
from ..formats.schema import (BOOL, DATE, FLOAT64, INT64, STRING,
                              MAX_DECIMAL_PRECISION, DataType, TableSchema,
                              decimal)
from . import ast
from .logical import (AggExpr, BArith, BCase, BColumn, BCompare, BExpr, BIn,
                      BLiteral, BLogical, BNot, BScale, LAggregate, LCrossJoin,
                      LFilter, LJoin, LLimit, LogicalPlan, LProject, LScan,
                      LSort)

EPOCH = datetime.date(1970, 1, 1)
DIV_SCALE = 6


def date_to_days(text: str) -> int:
    try:
        return (datetime.date.fromisoformat(text) - EPOCH).days
    except ValueError as exc:
        raise TypeMismatch(f"invalid date literal {text!r}") from exc


def days_to_date(days: int) -> str:
    return (EPOCH + datetime.timedelta(days=int(days))).isoformat()


def _add_months(d: datetime.date, months: int) -> datetime.date:
    total = d.year * 12 + (d.month - 1) + months
    year, month = divmod(total, 12)
    month += 1
    # clamp to the last day of the target month
    if month == 12:
        next_first = datetime.date(year + 1, 1, 1)
    else:
        next_first = datetime.date(year, month + 1, 1)
    last_day = (next_first - datetime.timedelta(days=1)).day
    return datetime.date(year, month, min(d.day, last_day))


def shift_date(days: int, interval: ast.IntervalLit, sign: int) -> int:
    d = EPOCH + datetime.timedelta(days=days)
    amount = sign * interval.value
    if interval.unit == "day":
        d = d + datetime.timedelta(days=amount)
    elif interval.unit == "month":
        d = _add_months(d, amount)
    elif interval.unit == "year":
        d = _add_months(d, 12 * amount)
    else:
        raise TypeMismatch(f"unknown interval unit {interval.unit!r}")
    return (d - EPOCH).days


def decimal_lit_parts(text: str) -> tuple[int, int]:
    """(scaled integer value, scale) of a decimal literal."""
    negative = text.startswith("-")
    body = text[1:] if negative else text
    if "." in body:
        whole, frac = body.split(".", 1)
    else:
        whole, frac = body, ""
    scale = len(frac)
    value = int((whole or "0") + frac)
    return (-value if negative else value), scale


@dataclass(frozen=True)
class _Scope:
    """Column resolution over the tables in scope."""
    schemas: tuple[TableSchema, ...]

    def resolve(self, name: str, table: Optional[str]) -> BColumn:
        hits = []
        for schema in self.schemas:
            if table is not None and schema.table != table:
                continue
            for col in schema.columns:
                if col.name == name:
                    hits.append(col)
        if not hits:
            where = f"{table}.{name}" if table else name
            raise UnknownColumn(where)
        if len(hits) > 1:
            raise TypeMismatch(f"ambiguous column {name!r}")
        return BColumn(name, hits[0].dtype)


def _scale_to(expr: BExpr, target_scale: int) -> BExpr:
    """Lift an int64 or decimal expression to a decimal of target_scale."""
    dt = expr.dtype
    if dt.kind == "int64":
        out = decimal(MAX_DECIMAL_PRECISION, target_scale)
        if isinstance(expr, BLiteral):
            return BLiteral(expr.value * 10 ** target_scale
                            if expr.value is not None else None, out)
        return BScale(expr, target_scale, out)
    if dt.kind != "decimal":
        raise TypeMismatch(f"cannot align {dt} to a decimal")
    if dt.scale == target_scale:
        return expr
    if dt.scale > target_scale:
        raise TypeMismatch(f"cannot narrow decimal scale {dt.scale} "
                           f"to {target_scale}")
    delta = target_scale - dt.scale
    out = decimal(min(dt.precision + delta, MAX_DECIMAL_PRECISION),
                  target_scale)
    if isinstance(expr, BLiteral):
        return BLiteral(expr.value * 10 ** delta
                        if expr.value is not None else None, out)
    return BScale(expr, delta, out)


def _align(left: BExpr, right: BExpr) -> tuple[BExpr, BExpr, DataType]:
    """Coerce two expressions to a common comparable/addable type."""
    lt, rt = left.dtype, right.dtype
    if lt == rt:
        return left, right, lt
    kinds = {lt.kind, rt.kind}
    if kinds == {"decimal"} or kinds == {"int64", "decimal"}:
        scale = max(lt.scale, rt.scale)
        left = _scale_to(left, scale)
        right = _scale_to(right, scale)
        return left, right, left.dtype
    if kinds == {"int64", "float64"}:
        return left, right, FLOAT64
    raise TypeMismatch(f"incompatible types {lt} and {rt}")


class Binder:
    def __init__(self, catalog: Catalog):
        self.catalog = catalog

    def bind(self, stmt: ast.SelectStmt) -> LogicalPlan:
        if not stmt.from_tables:
            raise NotSupported("SELECT without FROM is not supported")

        schemas = []
        for ref in stmt.from_tables:
            schema, _ = self.catalog.resolve(ref.name)
            schemas.append(schema)
        join_schemas = []
        for j in stmt.joins:
            schema, _ = self.catalog.resolve(j.table.name)
            join_schemas.append(schema)
        scope = _Scope(tuple(schemas + join_schemas))

        plan: LogicalPlan = self._scan(schemas[0])
        for schema in schemas[1:]:
            plan = LCrossJoin(plan, self._scan(schema))
        for j, schema in zip(stmt.joins, join_schemas):
            right = self._scan(schema)
            left_keys, right_keys, residual = self._split_join_condition(
                j.condition, plan.output_schema, schema, scope)
            plan = LJoin(plan, right, left_keys, right_keys, residual)

        if stmt.where is not None:
            pred = self.bind_expr(stmt.where, scope)
            if pred.dtype != BOOL:
                raise TypeMismatch("WHERE predicate must be boolean")
            plan = LFilter(plan, pred)

        keys = []
        for g in stmt.group_by:
            bound = self.bind_expr(g, scope)
            if not isinstance(bound, BColumn):
                raise NotSupported("GROUP BY supports plain columns only")
            keys.append(bound)

        has_agg = any(self._contains_agg(item.expr) for item in stmt.items)
        if has_agg or keys:
            plan = self._bind_aggregate(stmt, plan, scope, keys)
        else:
            exprs, names = [], []
            for i, item in enumerate(stmt.items):
                bound = self.bind_expr(item.expr, scope)
                exprs.append(bound)
                names.append(self._item_name(item, bound, i))
            plan = LProject(plan, tuple(exprs), tuple(names))

        if stmt.order_by:
            out = plan.output_schema
            sort_keys = []
            for o in stmt.order_by:
                if not isinstance(o.expr, ast.ColumnRef) or o.expr.table:
                    raise NotSupported(
                        "ORDER BY supports output columns only")
                if o.expr.name not in out.names():
                    raise UnknownColumn(o.expr.name)
                sort_keys.append((o.expr.name, o.ascending))
            plan = LSort(plan, tuple(sort_keys))

        if stmt.limit is not None:
            plan = LLimit(plan, stmt.limit)
        return plan

    # -- pieces --

    def _scan(self, schema: TableSchema) -> LScan:
        return LScan(schema.table, schema, tuple(schema.names()))

    @staticmethod
    def _item_name(item: ast.SelectItem, bound: BExpr, index: int) -> str:
        if item.alias:
            return item.alias
        if isinstance(bound, BColumn):
            return bound.name
        return f"_col{index}"

    def _contains_agg(self, expr: ast.Expr) -> bool:
        if isinstance(expr, ast.FuncCall):
            return expr.name in ast.AGGREGATE_FUNCS
        if isinstance(expr, ast.BinaryOp):
            return self._contains_agg(expr.left) or \
                self._contains_agg(expr.right)
        if isinstance(expr, ast.NotOp):
            return self._contains_agg(expr.expr)
        return False

    def _bind_aggregate(self, stmt: ast.SelectStmt, plan: LogicalPlan,
                        scope: _Scope, keys: list[BColumn]) -> LogicalPlan:
        key_names = [k.name for k in keys]
        aggs: list[AggExpr] = []
        # output column i is ("key", name) or ("agg", alias)
        out_items: list[tuple[str, str]] = []
        for i, item in enumerate(stmt.items):
            expr = item.expr
            if isinstance(expr, ast.ColumnRef):
                bound = scope.resolve(expr.name, expr.table)
                if bound.name not in key_names:
                    raise UngroupedColumn(bound.name)
                out_items.append(("key", item.alias or bound.name))
                continue
            if not (isinstance(expr, ast.FuncCall)
                    and expr.name in ast.AGGREGATE_FUNCS):
                raise NotSupported(
                    "select items in aggregate queries must be group keys "
                    "or aggregate calls")
            alias = item.alias or f"_col{i}"
            aggs.append(self._bind_agg_call(expr, scope, alias))
            out_items.append(("agg", alias))

        plan = LAggregate(plan, tuple(keys), tuple(aggs))

        natural = [("key", n) for n in key_names] + \
                  [("agg", a.alias) for a in aggs]
        if out_items == natural:
            return plan
        # reorder or rename via a trailing project
        out_schema = plan.output_schema
        key_iter = iter(key_names)
        exprs = []
        for kind, name in out_items:
            base = next(key_iter) if kind == "key" else name
            exprs.append(BColumn(base, out_schema.column(base).dtype))
        return LProject(plan, tuple(exprs),
                        tuple(name for _, name in out_items))

    def _bind_agg_call(self, call: ast.FuncCall, scope: _Scope,
                       alias: str) -> AggExpr:
        func = call.name
        if func == "count":
            if call.star:
                return AggExpr("count", None, INT64, alias)
            if len(call.args) != 1:
                raise TypeMismatch("count takes one argument")
            arg = self.bind_expr(call.args[0], scope)
            return AggExpr("count", arg, INT64, alias)
        if call.star or len(call.args) != 1:
            raise TypeMismatch(f"{func} takes one argument")
        arg = self.bind_expr(call.args[0], scope)
        dt = arg.dtype
        if func in ("min", "max"):
            if not dt.is_orderable:
                raise TypeMismatch(f"{func} over non-orderable type {dt}")
            return AggExpr(func, arg, dt, alias)
        if not dt.is_numeric:
            raise TypeMismatch(f"{func} over non-numeric type {dt}")
        if func == "sum":
            out = dt if dt.kind != "decimal" else \
                decimal(MAX_DECIMAL_PRECISION, dt.scale)
            return AggExpr("sum", arg, out, alias)
        if func == "avg":
            out = FLOAT64 if dt.kind == "float64" else \
                decimal(MAX_DECIMAL_PRECISION, DIV_SCALE)
            return AggExpr("avg", arg, out, alias)
        raise NotSupported(f"aggregate {func!r}")

    def _split_join_condition(self, cond: ast.Expr, left_schema: TableSchema,
                              right_schema: TableSchema, scope: _Scope,
                              ) -> tuple[tuple[str, ...], tuple[str, ...],
                                         Optional[BExpr]]:
        left_names = set(left_schema.names())
        right_names = set(right_schema.names())
        conjuncts = _split_and(cond)
        left_keys, right_keys, residual = [], [], []
        for c in conjuncts:
            pair = self._equi_pair(c, left_names, right_names, scope)
            if pair is not None:
                left_keys.append(pair[0])
                right_keys.append(pair[1])
            else:
                residual.append(self.bind_expr(c, scope))
        if not left_keys:
            raise NotSupported("JOIN requires at least one equality on "
                               "columns of both sides")
        res: Optional[BExpr] = None
        if residual:
            res = residual[0] if len(residual) == 1 else \
                BLogical("and", tuple(residual))
        return tuple(left_keys), tuple(right_keys), res

    def _equi_pair(self, expr: ast.Expr, left_names: set[str],
                   right_names: set[str], scope: _Scope,
                   ) -> Optional[tuple[str, str]]:
        if not (isinstance(expr, ast.BinaryOp) and expr.op == "="
                and isinstance(expr.left, ast.ColumnRef)
                and isinstance(expr.right, ast.ColumnRef)):
            return None
        a, b = expr.left.name, expr.right.name
        la = scope.resolve(a, expr.left.table)
        lb = scope.resolve(b, expr.right.table)
        if la.dtype != lb.dtype:
            raise TypeMismatch(f"join key types differ: {la.dtype} vs "
                               f"{lb.dtype}")
        if a in left_names and b in right_names:
            return a, b
        if b in left_names and a in right_names:
            return b, a
        return None

    # -- expressions --

    def bind_expr(self, expr: ast.Expr, scope: _Scope) -> BExpr:
        if isinstance(expr, ast.ColumnRef):
            return scope.resolve(expr.name, expr.table)
        if isinstance(expr, ast.IntLit):
            return BLiteral(expr.value, INT64)
        if isinstance(expr, ast.DecimalLit):
            value, scale = decimal_lit_parts(expr.text)
            return BLiteral(value, decimal(MAX_DECIMAL_PRECISION, scale))
        if isinstance(expr, ast.StringLit):
            return BLiteral(expr.value, STRING)
        if isinstance(expr, ast.DateLit):
            return BLiteral(date_to_days(expr.text), DATE)
        if isinstance(expr, ast.IntervalLit):
            raise TypeMismatch("interval literal outside date arithmetic")
        if isinstance(expr, ast.BinaryOp):
            return self._bind_binary(expr, scope)
        if isinstance(expr, ast.NotOp):
            inner = self.bind_expr(expr.expr, scope)
            if inner.dtype != BOOL:
                raise TypeMismatch("NOT requires a boolean operand")
            return BNot(inner)
        if isinstance(expr, ast.Between):
            low = ast.BinaryOp(">=", expr.expr, expr.low)
            high = ast.BinaryOp("<=", expr.expr, expr.high)
            return BLogical("and", (self.bind_expr(low, scope),
                                    self.bind_expr(high, scope)))
        if isinstance(expr, ast.InList):
            subject = self.bind_expr(expr.expr, scope)
            items = []
            for item in expr.items:
                lit = self.bind_expr(item, scope)
                if not isinstance(lit, BLiteral):
                    raise NotSupported("IN list items must be literals")
                a, b, _ = _align(subject, lit)
                if not isinstance(b, BLiteral):
                    raise NotSupported("IN list items must be literals")
                subject = a
                items.append(b)
            # realign earlier items in case the subject widened late
            items = [i if i.dtype == subject.dtype
                     else _scale_to(i, subject.dtype.scale)
                     for i in items]
            return BIn(subject, tuple(items))  # type: ignore[arg-type]
        if isinstance(expr, ast.CaseWhen):
            return self._bind_case(expr, scope)
        if isinstance(expr, ast.FuncCall):
            if expr.name in ast.AGGREGATE_FUNCS:
                raise NotSupported("aggregate calls are only allowed in the "
                                   "select list")
            raise NotSupported(f"function {expr.name!r}")
        raise NotSupported(type(expr).__name__)

    def _bind_binary(self, expr: ast.BinaryOp, scope: _Scope) -> BExpr:
        op = expr.op
        if op in ("and", "or"):
            left = self.bind_expr(expr.left, scope)
            right = self.bind_expr(expr.right, scope)
            if left.dtype != BOOL or right.dtype != BOOL:
                raise TypeMismatch(f"{op.upper()} requires boolean operands")
            args: list[BExpr] = []
            for part in (left, right):
                if isinstance(part, BLogical) and part.op == op:
                    args.extend(part.args)
                else:
                    args.append(part)
            return BLogical(op, tuple(args))

        # fold date +/- interval before general binding
        folded = self._fold_date_arith(expr, scope)
        if folded is not None:
            return folded

        left = self.bind_expr(expr.left, scope)
        right = self.bind_expr(expr.right, scope)

        if op in ("=", "<>", "<", "<=", ">", ">="):
            if left.dtype == right.dtype and left.dtype.kind in \
                    ("string", "date", "bool", "int64", "float64"):
                return BCompare(op, left, right)
            left, right, _ = _align(left, right)
            return BCompare(op, left, right)

        if op in ("+", "-", "*", "/"):
            return self._bind_arith(op, left, right)
        raise NotSupported(f"operator {op!r}")

    def _fold_date_arith(self, expr: ast.BinaryOp,
                         scope: _Scope) -> Optional[BExpr]:
        if expr.op not in ("+", "-"):
            return None
        if not isinstance(expr.right, ast.IntervalLit):
            return None
        base = self.bind_expr(expr.left, scope)
        if not (isinstance(base, BLiteral) and base.dtype == DATE):
            raise NotSupported("date arithmetic requires a date literal "
                               "on the left")
        sign = 1 if expr.op == "+" else -1
        days = shift_date(int(base.value), expr.right, sign)
        return BLiteral(days, DATE)

    def _bind_arith(self, op: str, left: BExpr, right: BExpr) -> BExpr:
        lk, rk = left.dtype.kind, right.dtype.kind
        numeric = ("int64", "float64", "decimal")
        if lk not in numeric or rk not in numeric:
            raise TypeMismatch(f"arithmetic on {left.dtype} and {right.dtype}")
        if "float64" in (lk, rk):
            if "decimal" in (lk, rk):
                raise TypeMismatch("cannot mix float and decimal")
            return self._fold_or(op, left, right, FLOAT64)
        if op == "/":
            left = _scale_to(left, left.dtype.scale
                             if lk == "decimal" else 0)
            right = _scale_to(right, right.dtype.scale
                              if rk == "decimal" else 0)
            return BArith("/", left, right,
                          decimal(MAX_DECIMAL_PRECISION, DIV_SCALE))
        if lk == "int64" and rk == "int64":
            return self._fold_or(op, left, right, INT64)
        if op == "*":
            l = _scale_to(left, left.dtype.scale) if lk == "decimal" else left
            r = _scale_to(right, right.dtype.scale) if rk == "decimal" \
                else right
            scale = (l.dtype.scale if l.dtype.kind == "decimal" else 0) + \
                    (r.dtype.scale if r.dtype.kind == "decimal" else 0)
            if scale > MAX_DECIMAL_PRECISION:
                raise TypeMismatch(f"product scale {scale} exceeds "
                                   f"decimal({MAX_DECIMAL_PRECISION})")
            return self._fold_or(op, l, r,
                                 decimal(MAX_DECIMAL_PRECISION, scale))
        # + or - over decimals: align to the max scale
        left, right, out = _align(left, right)
        return self._fold_or(op, left, right, out)

    @staticmethod
    def _fold_or(op: str, left: BExpr, right: BExpr,
                 dtype: DataType) -> BExpr:
        """Constant-fold int/decimal arithmetic over two literals."""
        if isinstance(left, BLiteral) and isinstance(right, BLiteral) \
                and left.value is not None and right.value is not None \
                and dtype.kind in ("int64", "decimal"):
            a, b = int(left.value), int(right.value)
            if op == "+":
                return BLiteral(a + b, dtype)
            if op == "-":
                return BLiteral(a - b, dtype)
            if op == "*":
                return BLiteral(a * b, dtype)
        return BArith(op, left, right, dtype)

    def _bind_case(self, expr: ast.CaseWhen, scope: _Scope) -> BCase:
        whens = []
        results = []
        for cond, result in expr.whens:
            bc = self.bind_expr(cond, scope)
            if bc.dtype != BOOL:
                raise TypeMismatch("CASE WHEN condition must be boolean")
            whens.append(bc)
            results.append(self.bind_expr(result, scope))
        else_ = self.bind_expr(expr.else_, scope) \
            if expr.else_ is not None else None

        branches = results + ([else_] if else_ is not None else [])
        common = branches[0]
        for b in branches[1:]:
            common, _, _ = _align(common, b)
        out = common.dtype
        results = [r if r.dtype == out else _align(r, common)[0]
                   for r in results]
        if else_ is not None and else_.dtype != out:
            else_ = _align(else_, common)[0]
        if else_ is None:
            else_ = BLiteral(None, out)
        return BCase(tuple(zip(whens, results)), else_, out)


def bind(stmt: ast.SelectStmt, catalog: Catalog) -> LogicalPlan:
    return Binder(catalog).bind(stmt)
