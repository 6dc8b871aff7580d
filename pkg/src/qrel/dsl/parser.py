"""Tokenizer and recursive-descent parser for the query language.

    query := expr
    expr  := LOAD string
           | SELECT expr WHERE pred
           | PROJECT expr ON ident ("," ident)*
           | JOIN expr "," expr ON sim COMBINE comb
           | SAMPLE expr SHOTS int
           | "(" expr ")"
    pred  := conj ("or" conj)*
    conj  := neg ("and" neg)*
    neg   := "not" neg | "(" pred ")" | ident ("=" | "<" | ">") (int | ident)
    sim   := eq(ident, ident) | within(ident, ident, number) | const(number)
    comb  := concat | concat_drop(ident) | "[" ident ("," ident)* "]"

Keywords are case-insensitive; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import QuerySyntaxError
from . import ast

KEYWORDS = {"LOAD", "SELECT", "WHERE", "PROJECT", "ON", "JOIN", "COMBINE", "SAMPLE", "SHOTS", "AND", "OR", "NOT"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[(),=<>\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword, ident, number, string, punct, eof
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if not m:
            ch = source[pos]
            if ch == '"':
                raise QuerySyntaxError("unterminated string literal", line, col)
            raise QuerySyntaxError(f"unexpected character {ch!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident" and text.upper() in KEYWORDS:
            tokens.append(Token("keyword", text.upper(), line, col))
        elif kind != "ws":
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, expected: str, tok: Token | None = None):
        tok = tok or self.tok
        raise QuerySyntaxError(f"expected {expected}, found {tok.describe()}", tok.line, tok.col)

    def at(self, kind: str, text: str | None = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.at(kind, text):
            self.error(what or text or kind)
        return self.advance()

    def ident(self, what: str = "a field name") -> str:
        return self.expect("ident", what=what).text

    def number(self) -> float:
        return float(self.expect("number", what="a number").text)

    def integer(self) -> int:
        t = self.expect("number", what="an integer")
        if not t.text.isdigit():
            self.error("an integer", t)
        return int(t.text)

    # -- expressions --

    def parse_query(self) -> ast.Expr:
        e = self.expr()
        if not self.at("eof"):
            self.error("end of query")
        return e

    def expr(self) -> ast.Expr:
        t = self.tok
        pos = (t.line, t.col)
        if self.at("punct", "("):
            self.advance()
            e = self.expr()
            self.expect("punct", ")")
            return e
        if t.kind != "keyword" or t.text not in {"LOAD", "SELECT", "PROJECT", "JOIN", "SAMPLE"}:
            self.error("LOAD, SELECT, PROJECT, JOIN or SAMPLE")
        self.advance()
        if t.text == "LOAD":
            return ast.Load(_unquote(self.expect("string", what="a quoted path").text), pos=pos)
        if t.text == "SELECT":
            child = self.expr()
            self.expect("keyword", "WHERE")
            return ast.Select(child, self.pred(), pos=pos)
        if t.text == "PROJECT":
            child = self.expr()
            self.expect("keyword", "ON")
            names = [self.ident()]
            while self.at("punct", ",") and self.peek().kind == "ident":
                self.advance()
                names.append(self.ident())
            return ast.Project(child, tuple(names), pos=pos)
        if t.text == "JOIN":
            left = self.expr()
            self.expect("punct", ",")
            right = self.expr()
            self.expect("keyword", "ON")
            sim = self.sim()
            self.expect("keyword", "COMBINE")
            return ast.Join(left, right, sim, self.comb(), pos=pos)
        child = self.expr()
        self.expect("keyword", "SHOTS")
        shots_tok = self.tok
        shots = self.integer()
        if shots < 1:
            self.error("a positive shot count", shots_tok)
        return ast.Sample(child, shots, pos=pos)

    # -- predicates --

    def pred(self) -> ast.Pred:
        p = self.conj()
        while self.at("keyword", "OR"):
            self.advance()
            p = ast.Or(p, self.conj())
        return p

    def conj(self) -> ast.Pred:
        p = self.neg()
        while self.at("keyword", "AND"):
            self.advance()
            p = ast.And(p, self.neg())
        return p

    def neg(self) -> ast.Pred:
        if self.at("keyword", "NOT"):
            self.advance()
            return ast.Not(self.neg())
        if self.at("punct", "("):
            self.advance()
            p = self.pred()
            self.expect("punct", ")")
            return p
        t = self.tok
        name = self.ident("a field name or '('")
        if not (self.at("punct", "=") or self.at("punct", "<") or self.at("punct", ">")):
            self.error("'=', '<' or '>'")
        op = self.advance().text
        if self.at("ident"):
            value = ast.FieldRef(self.advance().text)
        else:
            value = self.integer()
        return ast.Cmp(name, op, value, pos=(t.line, t.col))

    # -- operator catalogs --

    def sim(self) -> ast.SimSpec:
        t = self.tok
        name = self.ident("a similarity (eq, within, const)")
        self.expect("punct", "(")
        if name == "eq":
            a = self.ident()
            self.expect("punct", ",")
            spec = ast.EqSim(a, self.ident())
        elif name == "within":
            a = self.ident()
            self.expect("punct", ",")
            b = self.ident()
            self.expect("punct", ",")
            spec = ast.WithinSim(a, b, self.number())
        elif name == "const":
            spec = ast.ConstSim(self.number())
        else:
            self.error("a similarity (eq, within, const)", t)
        self.expect("punct", ")")
        return spec

    def comb(self) -> ast.CombSpec:
        if self.at("punct", "["):
            self.advance()
            names = [self.ident()]
            while self.at("punct", ","):
                self.advance()
                names.append(self.ident())
            self.expect("punct", "]")
            return ast.Permute(tuple(names))
        t = self.tok
        name = self.ident("a combine operator (concat, concat_drop, [fields])")
        if name == "concat":
            return ast.Concat()
        if name == "concat_drop":
            self.expect("punct", "(")
            f = self.ident()
            self.expect("punct", ")")
            return ast.ConcatDrop(f)
        self.error("a combine operator (concat, concat_drop, [fields])", t)


def parse(source: str) -> ast.Expr:
    return Parser(source).parse_query()
