"""Type-check a query AST and linearize it into an executable plan."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .. import qops
from ..errors import QrelError, QubitBudgetExceeded, RelationFormatError
from ..qstate import DEFAULT_MAX_QUBITS
from ..relation import Schema, WeightedRelation, field_value, loads_relation
from . import ast


@dataclass(frozen=True)
class PlanConfig:
    max_qubits: int = DEFAULT_MAX_QUBITS
    iterations: int | str = "auto"
    similarity_level: int = 1
    postselect: bool = True
    base_dir: Path = Path(".")


@dataclass
class PlanStep:
    index: int
    kind: str
    label: str
    schema: Schema
    qubits: int
    inputs: tuple[int, ...] = ()
    relation: WeightedRelation | None = None  # LOAD
    predicate: Callable[[int], bool] | None = None  # SELECT
    fields: tuple[str, ...] = ()  # PROJECT
    sim: qops.SimilarityOp | None = None  # JOIN
    combine: qops.CombineOp | None = None  # JOIN
    shots: int = 0  # SAMPLE
    detail: str = ""


@dataclass
class QueryPlan:
    root: ast.Expr
    steps: list[PlanStep]
    config: PlanConfig

    @property
    def peak_qubits(self) -> int:
        return max(s.qubits for s in self.steps)

    @property
    def output(self) -> PlanStep:
        return self.steps[-1]


def tag(err: QrelError, label: str) -> QrelError:
    """Attach the originating node label to an error, keeping the innermost one."""
    if getattr(err, "node", None) is None:
        err.node = label
    return err


def compile_predicate(pred: ast.Pred, schema: Schema) -> Callable[[int], bool]:
    """Turn a predicate AST into a function over encoded tuple bits."""
    if isinstance(pred, ast.Cmp):
        schema.position(pred.field)
        if isinstance(pred.value, ast.FieldRef):
            schema.position(pred.value.name)
            rhs = lambda t, n=pred.value.name: field_value(schema, t, n)  # noqa: E731
        else:
            rhs = lambda t, v=pred.value: v  # noqa: E731
        op = {"=": int.__eq__, "<": int.__lt__, ">": int.__gt__}[pred.op]
        name = pred.field
        return lambda t: op(field_value(schema, t, name), rhs(t))
    if isinstance(pred, ast.Not):
        inner = compile_predicate(pred.operand, schema)
        return lambda t: not inner(t)
    left = compile_predicate(pred.left, schema)
    right = compile_predicate(pred.right, schema)
    if isinstance(pred, ast.And):
        return lambda t: left(t) and right(t)
    return lambda t: left(t) or right(t)


def build_similarity(spec: ast.SimSpec, sr: Schema, ss: Schema, level: int) -> qops.SimilarityOp:
    if isinstance(spec, ast.EqSim):
        op = qops.equality_similarity(sr, spec.left, ss, spec.right)
    elif isinstance(spec, ast.WithinSim):
        op = qops.within_similarity(sr, spec.left, ss, spec.right, spec.scale)
    else:
        if not 0 <= spec.value <= 1:
            raise qops.InvalidSimilarity(f"const() needs a value in [0, 1], got {spec.value:g}")
        op = qops.constant_similarity(spec.value)
    return op.with_level(level)


def build_combine(spec: ast.CombSpec, sr: Schema, ss: Schema) -> qops.CombineOp:
    if isinstance(spec, ast.Concat):
        return qops.concat(sr, ss)
    if isinstance(spec, ast.ConcatDrop):
        return qops.concat_drop(sr, ss, spec.field)
    return qops.permutation(sr, ss, spec.fields)


class _Planner:
    def __init__(self, config: PlanConfig):
        self.config = config
        self.steps: list[PlanStep] = []

    def add(self, step: PlanStep) -> int:
        if step.qubits > self.config.max_qubits:
            raise tag(QubitBudgetExceeded(step.qubits, self.config.max_qubits, step.label), step.label)
        self.steps.append(step)
        return step.index

    def visit(self, node: ast.Expr) -> int:
        label = ast.node_label(node)
        try:
            return self._visit(node, label)
        except QrelError as e:
            raise tag(e, label)

    def _visit(self, node: Any, label: str) -> int:
        idx = lambda: len(self.steps)  # noqa: E731
        if isinstance(node, ast.Load):
            rel = self.load(node.path)
            c = rel.schema.total_bits
            return self.add(PlanStep(idx(), "LOAD", label, rel.schema, c, relation=rel,
                                     detail=f"{node.path} rows={len(rel)}"))
        if isinstance(node, ast.Select):
            child = self.visit(node.child)
            schema = self.steps[child].schema
            pred = compile_predicate(node.pred, schema)
            return self.add(PlanStep(idx(), "SELECT", label, schema, schema.total_bits, (child,),
                                     predicate=pred, detail=ast.format_pred(node.pred)))
        if isinstance(node, ast.Project):
            child = self.visit(node.child)
            cs = self.steps[child].schema
            if len(set(node.fields)) != len(node.fields):
                raise QrelError("projection lists a field twice")
            schema = cs.select(node.fields)
            return self.add(PlanStep(idx(), "PROJECT", label, schema, cs.total_bits, (child,),
                                     fields=node.fields, detail=",".join(node.fields)))
        if isinstance(node, ast.Join):
            left = self.visit(node.left)
            right = self.visit(node.right)
            sr, ss = self.steps[left].schema, self.steps[right].schema
            sim = build_similarity(node.sim, sr, ss, self.config.similarity_level)
            comb = build_combine(node.comb, sr, ss)
            return self.add(PlanStep(idx(), "JOIN", label, comb.out_schema,
                                     qops.join_register_size(sr, ss), (left, right), sim=sim,
                                     combine=comb, detail=f"{sim.name} {comb.name}"))
        if isinstance(node, ast.Sample):
            child = self.visit(node.child)
            schema = self.steps[child].schema
            return self.add(PlanStep(idx(), "SAMPLE", label, schema, 2 * schema.total_bits, (child,),
                                     shots=node.shots, detail=f"shots={node.shots}"))
        raise TypeError(f"not a query node: {node!r}")

    def load(self, path: str) -> WeightedRelation:
        full = self.config.base_dir / path
        try:
            text = full.read_text()
        except OSError as e:
            raise RelationFormatError(f"cannot read relation file ({e.strerror})", None, path) from None
        return loads_relation(text, path)


def plan(root: ast.Expr, config: PlanConfig | None = None) -> QueryPlan:
    """Resolve files and schemas, build operators, and check the qubit budget per node."""
    config = config or PlanConfig()
    p = _Planner(config)
    p.visit(root)
    return QueryPlan(root, p.steps, config)
