"""Query AST and its canonical pretty-printer.

Source positions are carried on every node but excluded from equality, so a
parsed tree compares equal to a hand-built one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


def _pos():
    return field(default=(0, 0), compare=False, repr=False)


# -- predicates ----------------------------------------------------------------


@dataclass(frozen=True)
class Cmp:
    field: str
    op: str  # one of "=", "<", ">"
    value: Union[int, "FieldRef"]
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class FieldRef:
    name: str


@dataclass(frozen=True)
class And:
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Or:
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Not:
    operand: Pred


Pred = Union[Cmp, And, Or, Not]


# -- similarity and combine specs -------------------------------------------------


@dataclass(frozen=True)
class EqSim:
    left: str
    right: str


@dataclass(frozen=True)
class WithinSim:
    left: str
    right: str
    scale: float


@dataclass(frozen=True)
class ConstSim:
    value: float


@dataclass(frozen=True)
class Concat:
    pass


@dataclass(frozen=True)
class ConcatDrop:
    field: str


@dataclass(frozen=True)
class Permute:
    fields: tuple[str, ...]


SimSpec = Union[EqSim, WithinSim, ConstSim]
CombSpec = Union[Concat, ConcatDrop, Permute]


# -- relational expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Load:
    path: str
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Select:
    child: Expr
    pred: Pred
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Project:
    child: Expr
    fields: tuple[str, ...]
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Join:
    left: Expr
    right: Expr
    sim: SimSpec
    comb: CombSpec
    pos: tuple[int, int] = _pos()


@dataclass(frozen=True)
class Sample:
    child: Expr
    shots: int
    pos: tuple[int, int] = _pos()


Expr = Union[Load, Select, Project, Join, Sample]


def node_label(node: Expr) -> str:
    kind = type(node).__name__.upper()
    line, col = node.pos
    return f"{kind}@{line}:{col}"


# -- printer -----------------------------------------------------------------------------


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _num(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


_PREC = {Or: 1, And: 2, Not: 3, Cmp: 4}


def format_pred(p: Pred) -> str:
    if isinstance(p, Cmp):
        rhs = p.value.name if isinstance(p.value, FieldRef) else str(p.value)
        return f"{p.field} {p.op} {rhs}"
    if isinstance(p, Not):
        inner = format_pred(p.operand)
        return f"not {inner}" if _PREC[type(p.operand)] >= _PREC[Not] else f"not ({inner})"
    word = "or" if isinstance(p, Or) else "and"
    prec = _PREC[type(p)]
    left = format_pred(p.left)
    right = format_pred(p.right)
    if _PREC[type(p.left)] < prec:
        left = f"({left})"
    if _PREC[type(p.right)] <= prec:
        right = f"({right})"
    return f"{left} {word} {right}"


def format_sim(s: SimSpec) -> str:
    if isinstance(s, EqSim):
        return f"eq({s.left}, {s.right})"
    if isinstance(s, WithinSim):
        return f"within({s.left}, {s.right}, {_num(s.scale)})"
    return f"const({_num(s.value)})"


def format_comb(c: CombSpec) -> str:
    if isinstance(c, Concat):
        return "concat"
    if isinstance(c, ConcatDrop):
        return f"concat_drop({c.field})"
    return "[" + ", ".join(c.fields) + "]"


def format_query(e: Expr) -> str:
    if isinstance(e, Load):
        return f"LOAD {_quote(e.path)}"
    if isinstance(e, Select):
        return f"SELECT {format_query(e.child)} WHERE {format_pred(e.pred)}"
    if isinstance(e, Project):
        return f"PROJECT {format_query(e.child)} ON {', '.join(e.fields)}"
    if isinstance(e, Join):
        return (
            f"JOIN {format_query(e.left)}, {format_query(e.right)} "
            f"ON {format_sim(e.sim)} COMBINE {format_comb(e.comb)}"
        )
    if isinstance(e, Sample):
        return f"SAMPLE {format_query(e.child)} SHOTS {e.shots}"
    raise TypeError(f"not a query node: {e!r}")
