"""Run a query plan on the quantum simulator, the classical oracle, or both."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .. import coracle, qops
from ..errors import QrelError, QubitBudgetExceeded
from ..relation import WeightedRelation, decode_tuple, prepare_state, relation_from_distribution, sample_oracle
from .planner import PlanStep, QueryPlan, tag

MODES = ("quantum", "classical", "both")


@dataclass
class StepStats:
    label: str
    kind: str
    qubits: int
    iterations: int | None = None
    success_probability: float | None = None
    c_rs: float | None = None
    quantum_steps: int = 0
    classical_steps: int = 0


@dataclass
class ResultDocument:
    mode: str
    seed: int
    relation: WeightedRelation | None = None
    samples: dict[int, int] | None = None
    stats: list[StepStats] = field(default_factory=list)
    tv_distance: float | None = None
    max_abs_diff: float | None = None
    error: QrelError | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def exit_code(self) -> int:
        if self.error is None:
            return 0
        return 3 if isinstance(self.error, QubitBudgetExceeded) else 2

    def render(self) -> str:
        return render_document(self)


def _node_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _empirical(rel: WeightedRelation, draws: list[int]) -> tuple[WeightedRelation, dict[int, int]]:
    counts = dict(sorted(Counter(draws).items()))
    total = sum(counts.values())
    return relation_from_distribution(rel.schema, {t: n / total for t, n in counts.items()}), counts


class _Run:
    def __init__(self, plan: QueryPlan, engine: str, seed: int):
        self.plan = plan
        self.cfg = plan.config
        self.engine = engine
        self.seed = seed
        self.results: list[WeightedRelation] = []
        self.samples: dict[int, dict[int, int]] = {}
        self.stats: list[StepStats] = []

    def run(self) -> WeightedRelation:
        for step in self.plan.steps:
            st = StepStats(step.label, step.kind, step.qubits)
            try:
                rel = self.step(step, st)
            except QrelError as e:
                raise tag(e, step.label)
            self.results.append(rel)
            self.stats.append(st)
        return self.results[-1]

    def step(self, step: PlanStep, st: StepStats) -> WeightedRelation:
        inputs = [self.results[i] for i in step.inputs]
        quantum = self.engine == "quantum"
        mq = self.cfg.max_qubits
        if step.kind == "LOAD":
            return step.relation
        if step.kind == "SELECT":
            (rel,) = inputs
            if not quantum:
                out, counter = coracle.classical_select(rel, step.predicate)
                st.classical_steps = counter.comparisons
                return out
            state = prepare_state(rel, mq)
            final, report = qops.grover_select(state, step.predicate, self.cfg.iterations)
            st.iterations = report.iterations
            st.success_probability = report.final_success_probability
            st.quantum_steps = report.grover_steps
            if self.cfg.postselect:
                return qops.postselect(final, rel.schema, step.predicate)
            return qops.state_to_relation(final, rel.schema)
        if step.kind == "PROJECT":
            (rel,) = inputs
            if not quantum:
                return coracle.classical_project(rel, step.fields)
            return qops.project(prepare_state(rel, mq), rel.schema, step.fields)
        if step.kind == "JOIN":
            r, s = inputs
            if not quantum:
                out, counter = coracle.classical_join(r, s, step.combine, step.sim)
                st.classical_steps = counter.comparisons
                return out
            out, report = qops.join_quantum(
                r, s, step.combine, step.sim, self.cfg.iterations,
                postselect=self.cfg.postselect, max_qubits=mq,
            )
            st.iterations = report.iterations
            st.success_probability = report.success_probability
            st.c_rs = report.conditional_similarity
            st.quantum_steps = report.quantum_steps
            st.classical_steps = report.classical_steps_reference
            return out
        if step.kind == "SAMPLE":
            (rel,) = inputs
            seed = _node_seed(self.seed, step.index)
            if quantum:
                draws = sample_oracle(rel, step.shots, seed, mq)
            else:
                rng = np.random.default_rng(seed)
                outcomes = np.array(list(rel.rows), dtype=np.int64)
                p = np.array(list(rel.rows.values()))
                draws = [int(d) for d in rng.choice(outcomes, size=step.shots, p=p / p.sum())]
            out, counts = _empirical(rel, draws)
            self.samples[step.index] = counts
            return out
        raise QrelError(f"unknown plan step {step.kind}")


def execute(plan: QueryPlan, mode: str = "quantum", seed: int = 0) -> ResultDocument:
    """Execute ``plan``. Operator errors come back in the document, tagged with their node."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    doc = ResultDocument(mode, seed)
    engines = ["quantum", "classical"] if mode == "both" else [mode]
    runs = []
    try:
        for engine in engines:
            run = _Run(plan, engine, seed)
            run.run()
            runs.append(run)
    except QrelError as e:
        doc.error = e
        return doc

    primary = runs[0]
    doc.relation = primary.results[-1]
    doc.samples = primary.samples.get(plan.output.index)
    doc.stats = primary.stats
    if mode == "both":
        classical = runs[1]
        for q, c in zip(doc.stats, classical.stats):
            q.classical_steps = c.classical_steps
        doc.tv_distance, doc.max_abs_diff = coracle.compare_distributions(
            doc.relation, classical.results[-1]
        )
    return doc


# -- rendering ------------------------------------------------------------------


def _f(x: float | None) -> str:
    if x is None:
        return "n/a"
    s = f"{x:.12f}"
    return "0.000000000000" if s == "-0.000000000000" else s


def render_document(doc: ResultDocument) -> str:
    lines = ["# qrel result", ""]
    if doc.error is not None:
        lines += [
            "[error]",
            f"kind = {doc.error.kind}",
            f"node = {getattr(doc.error, 'node', None) or 'n/a'}",
            f"message = {doc.error.message}",
        ]
        return "\n".join(lines) + "\n"

    rel = doc.relation
    lines += ["[schema]", str(rel.schema), "", "[distribution]"]
    for t, p in rel.rows.items():
        lines.append(f"{','.join(map(str, decode_tuple(rel.schema, t)))} = {_f(p)}")
    if doc.samples is not None:
        lines += ["", "[samples]"]
        for t, n in doc.samples.items():
            lines.append(f"{','.join(map(str, decode_tuple(rel.schema, t)))} = {n}")

    amplified = [s for s in doc.stats if s.iterations is not None]
    joins = [s for s in doc.stats if s.c_rs is not None]
    last = amplified[-1] if amplified else None
    report = [
        ("mode", doc.mode),
        ("seed", str(doc.seed)),
        ("iterations", str(sum(s.iterations for s in amplified)) if amplified else "n/a"),
        ("success_probability", _f(last.success_probability) if last else "n/a"),
        ("C_rs", _f(joins[-1].c_rs) if joins else "n/a"),
        ("quantum_steps", str(sum(s.quantum_steps for s in doc.stats)) if doc.mode != "classical" else "n/a"),
        ("classical_steps", str(sum(s.classical_steps for s in doc.stats)) if doc.mode != "quantum" or joins else "n/a"),
    ]
    if doc.mode == "both":
        report += [("tv_distance", _f(doc.tv_distance)), ("max_abs_diff", _f(doc.max_abs_diff))]
    lines += ["", "[report]"] + [f"{k} = {v}" for k, v in report]

    lines += ["", "[operators]"]
    for s in doc.stats:
        parts = [s.label, f"qubits={s.qubits}"]
        if s.iterations is not None:
            parts += [f"iterations={s.iterations}", f"success_probability={_f(s.success_probability)}"]
        if s.c_rs is not None:
            parts.append(f"C_rs={_f(s.c_rs)}")
        if s.quantum_steps:
            parts.append(f"quantum_steps={s.quantum_steps}")
        if s.classical_steps:
            parts.append(f"classical_steps={s.classical_steps}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
