from . import ast
from .ast import to_sql
from .binder import Binder, bind
from .logical import (AggExpr, BArith, BCase, BColumn, BCompare, BExpr, BIn,
                      BLiteral, BLogical, BNot, BScale, LAggregate, LCrossJoin,
                      LFilter, LJoin, LLimit, LogicalPlan, LProject, LScan,
                      LSort, describe, expr_from_json, expr_to_json,
                      plan_from_json, plan_tables, plan_to_json)
from .parser import parse

__all__ = [
    "ast", "to_sql", "Binder", "bind", "parse", "describe",
    "AggExpr", "BArith", "BCase", "BColumn", "BCompare", "BExpr", "BIn",
    "BLiteral", "BLogical", "BNot", "BScale", "LAggregate", "LCrossJoin",
    "LFilter", "LJoin", "LLimit", "LogicalPlan", "LProject", "LScan", "LSort",
    "expr_from_json", "expr_to_json", "plan_from_json", "plan_tables",
    "plan_to_json",
]
