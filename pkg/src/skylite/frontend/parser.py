"""Hand-written lexer and recursive-descent parser for the supported SQL
subset (the surface of TPC-H Q1, Q6, and Q12). Keywords and identifiers are
case-insensitive and lowered at parse time."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..errors import NotSupported, SqlSyntaxError
from . import ast

KEYWORDS = {
    "select", "from", "where", "group", "by", "order", "limit", "as",
    "and", "or", "not", "between", "in", "case", "when", "then", "else",
    "end", "date", "interval", "join", "inner", "on", "asc", "desc",
}

INTERVAL_UNITS = ("year", "month", "day")

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>\d+\.\d+|\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<op><>|<=|>=|=|<|>|\+|-|\*|/)
  | (?P<punct>[(),;.])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | number | string | op | punct | eof
    text: str
    pos: int


def tokenize(sql: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(sql):
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            raise SqlSyntaxError(f"unexpected character {sql[pos]!r}", pos)
        if m.lastgroup != "ws":
            text = m.group()
            kind = m.lastgroup
            if kind == "ident":
                text = text.lower()
                if text in KEYWORDS:
                    kind = "keyword"
            elif kind == "string":
                text = text[1:-1].replace("''", "'")
            tokens.append(Token(kind, text, pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(sql)))
    return tokens


class Parser:
    def __init__(self, sql: str):
        self.sql = sql
        self.tokens = tokenize(sql)
        self.i = 0

    # -- token plumbing --

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        return self.cur.kind == "keyword" and self.cur.text in words

    def accept_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.advance()
            return True
        return False

    def expect_keyword(self, word: str) -> None:
        if not self.accept_keyword(word):
            self.fail(f"expected {word.upper()}")

    def accept_punct(self, ch: str) -> bool:
        if self.cur.kind == "punct" and self.cur.text == ch:
            self.advance()
            return True
        return False

    def expect_punct(self, ch: str) -> None:
        if not self.accept_punct(ch):
            self.fail(f"expected {ch!r}")

    def fail(self, message: str) -> None:
        raise SqlSyntaxError(f"{message}, found {self.cur.text!r}",
                             self.cur.pos)

    # -- grammar --

    def parse_statement(self) -> ast.SelectStmt:
        stmt = self.parse_select()
        self.accept_punct(";")
        if self.cur.kind != "eof":
            self.fail("trailing input after statement")
        return stmt

    def parse_select(self) -> ast.SelectStmt:
        self.expect_keyword("select")
        items = [self.parse_select_item()]
        while self.accept_punct(","):
            items.append(self.parse_select_item())

        from_tables: list[ast.TableRef] = []
        joins: list[ast.ExplicitJoin] = []
        if self.accept_keyword("from"):
            from_tables.append(self.parse_table_ref())
            while True:
                if self.accept_punct(","):
                    from_tables.append(self.parse_table_ref())
                elif self.at_keyword("join", "inner"):
                    self.accept_keyword("inner")
                    self.expect_keyword("join")
                    table = self.parse_table_ref()
                    self.expect_keyword("on")
                    joins.append(ast.ExplicitJoin(table, self.parse_expr()))
                else:
                    break

        where = self.parse_expr() if self.accept_keyword("where") else None

        group_by: list[ast.Expr] = []
        if self.accept_keyword("group"):
            self.expect_keyword("by")
            group_by.append(self.parse_expr())
            while self.accept_punct(","):
                group_by.append(self.parse_expr())

        order_by: list[ast.OrderItem] = []
        if self.accept_keyword("order"):
            self.expect_keyword("by")
            order_by.append(self.parse_order_item())
            while self.accept_punct(","):
                order_by.append(self.parse_order_item())

        limit = None
        if self.accept_keyword("limit"):
            tok = self.cur
            if tok.kind != "number" or "." in tok.text:
                self.fail("expected integer limit")
            limit = int(self.advance().text)

        return ast.SelectStmt(tuple(items), tuple(from_tables), tuple(joins),
                              where, tuple(group_by), tuple(order_by), limit)

    def parse_select_item(self) -> ast.SelectItem:
        expr = self.parse_expr()
        alias = None
        if self.accept_keyword("as"):
            if self.cur.kind != "ident":
                self.fail("expected alias identifier")
            alias = self.advance().text
        elif self.cur.kind == "ident":
            alias = self.advance().text
        return ast.SelectItem(expr, alias)

    def parse_table_ref(self) -> ast.TableRef:
        if self.cur.kind != "ident":
            self.fail("expected table name")
        return ast.TableRef(self.advance().text)

    def parse_order_item(self) -> ast.OrderItem:
        expr = self.parse_expr()
        ascending = True
        if self.accept_keyword("desc"):
            ascending = False
        else:
            self.accept_keyword("asc")
        return ast.OrderItem(expr, ascending)

    # expressions, lowest precedence first

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.accept_keyword("or"):
            left = ast.BinaryOp("or", left, self.parse_and())
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_not()
        while self.accept_keyword("and"):
            left = ast.BinaryOp("and", left, self.parse_not())
        return left

    def parse_not(self) -> ast.Expr:
        if self.accept_keyword("not"):
            return ast.NotOp(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> ast.Expr:
        left = self.parse_additive()
        if self.cur.kind == "op" and self.cur.text in \
                ("=", "<>", "<", "<=", ">", ">="):
            op = self.advance().text
            return ast.BinaryOp(op, left, self.parse_additive())
        if self.at_keyword("between"):
            self.advance()
            low = self.parse_additive()
            self.expect_keyword("and")
            high = self.parse_additive()
            return ast.Between(left, low, high)
        if self.at_keyword("in"):
            self.advance()
            self.expect_punct("(")
            if self.at_keyword("select"):
                raise NotSupported("subqueries are not supported")
            items = [self.parse_additive()]
            while self.accept_punct(","):
                items.append(self.parse_additive())
            self.expect_punct(")")
            return ast.InList(left, tuple(items))
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            op = self.advance().text
            left = ast.BinaryOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            op = self.advance().text
            left = ast.BinaryOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> ast.Expr:
        if self.cur.kind == "op" and self.cur.text == "-":
            pos = self.advance()
            inner = self.parse_unary()
            if isinstance(inner, ast.IntLit):
                return ast.IntLit(-inner.value)
            if isinstance(inner, ast.DecimalLit):
                return ast.DecimalLit("-" + inner.text)
            return ast.BinaryOp("-", ast.IntLit(0), inner)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            if "." in tok.text:
                return ast.DecimalLit(tok.text)
            return ast.IntLit(int(tok.text))
        if tok.kind == "string":
            self.advance()
            return ast.StringLit(tok.text)
        if self.at_keyword("date"):
            self.advance()
            if self.cur.kind != "string":
                self.fail("expected date string literal")
            return ast.DateLit(self.advance().text)
        if self.at_keyword("interval"):
            self.advance()
            if self.cur.kind != "string":
                self.fail("expected interval quantity string")
            value = int(self.advance().text)
            if self.cur.kind != "ident" or self.cur.text not in INTERVAL_UNITS:
                self.fail(f"expected interval unit {INTERVAL_UNITS}")
            return ast.IntervalLit(value, self.advance().text)
        if self.at_keyword("case"):
            return self.parse_case()
        if tok.kind == "ident":
            self.advance()
            if self.accept_punct("("):
                return self.finish_func_call(tok.text)
            if self.accept_punct("."):
                if self.cur.kind != "ident":
                    self.fail("expected column name after '.'")
                return ast.ColumnRef(self.advance().text, table=tok.text)
            return ast.ColumnRef(tok.text)
        if self.accept_punct("("):
            if self.at_keyword("select"):
                raise NotSupported("subqueries are not supported")
            expr = self.parse_expr()
            self.expect_punct(")")
            return expr
        self.fail("expected expression")
        raise AssertionError("unreachable")

    def finish_func_call(self, name: str) -> ast.FuncCall:
        if self.cur.kind == "op" and self.cur.text == "*":
            self.advance()
            self.expect_punct(")")
            return ast.FuncCall(name, star=True)
        args: list[ast.Expr] = []
        if not self.accept_punct(")"):
            args.append(self.parse_expr())
            while self.accept_punct(","):
                args.append(self.parse_expr())
            self.expect_punct(")")
        return ast.FuncCall(name, tuple(args))

    def parse_case(self) -> ast.CaseWhen:
        self.expect_keyword("case")
        whens = []
        while self.accept_keyword("when"):
            cond = self.parse_expr()
            self.expect_keyword("then")
            whens.append((cond, self.parse_expr()))
        if not whens:
            self.fail("CASE requires at least one WHEN")
        else_ = self.parse_expr() if self.accept_keyword("else") else None
        self.expect_keyword("end")
        return ast.CaseWhen(tuple(whens), else_)


def parse(sql: str) -> ast.SelectStmt:
    """Parse a SQL string into an AST; deterministic."""
    return Parser(sql).parse_statement()
