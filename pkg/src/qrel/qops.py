"""Relational operators realized on the state-vector engine.

Selection is amplitude amplification over a predicate on basis states,
projection is a partial trace onto the kept fields' qubits, and the
generalized join runs similarity encoding into an ancilla, amplification of
the ancilla=1 subspace, and relabeling through a combine operator.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import qstate
from .errors import (
    EmptyJoin,
    EmptySelection,
    InvalidFraction,
    InvalidSimilarity,
    QrelError,
    QubitBudgetExceeded,
    SchemaMismatch,
)
from .qstate import DEFAULT_MAX_QUBITS, StateVector
from .relation import (
    Schema,
    WeightedRelation,
    field_value,
    prepare_state,
    relation_from_distribution,
)

# Marked mass at or below this is treated as no marked states at all.
EMPTY_MASS_TOL = 1e-15
# One Grover iteration = one oracle query (phase flip) + one reflection.
STEPS_PER_ITERATION = 2
SIM_MAGNITUDE_TOL = 1e-12

Iterations = int | Literal["auto"]


# -- similarity and combine operators -----------------------------------------


@dataclass(frozen=True)
class SimilarityOp:
    """Pairwise similarity ``(i, j) -> z`` with ``|z| <= 1``.

    ``level`` picks how ``z`` becomes a probability weight and ancilla phase:
    level 1 takes a real ``z`` in [0, 1] as the weight itself; level 2 uses
    weight ``|z|**2`` and phase ``arg z``.
    """

    name: str
    fn: Callable[[int, int], complex]
    level: int = 1
    arity: tuple[Schema, Schema] | None = None
    symmetric: bool = False

    def __post_init__(self):
        if self.level not in (1, 2):
            raise InvalidSimilarity(f"similarity level must be 1 or 2, got {self.level}")

    def with_level(self, level: int) -> SimilarityOp:
        return SimilarityOp(self.name, self.fn, level, self.arity, self.symmetric)

    def evaluate(self, i: int, j: int) -> complex:
        z = complex(self.fn(i, j))
        if abs(z) > 1 + SIM_MAGNITUDE_TOL:
            raise InvalidSimilarity(f"{self.name} returned {z} with magnitude above 1")
        return z

    def weight_phase(self, i: int, j: int) -> tuple[float, float]:
        z = self.evaluate(i, j)
        if self.level == 1:
            if z.imag != 0 or not -SIM_MAGNITUDE_TOL <= z.real <= 1 + SIM_MAGNITUDE_TOL:
                raise InvalidSimilarity(
                    f"{self.name} returned {z}; level-1 similarity must be real in [0, 1]"
                )
            return min(max(z.real, 0.0), 1.0), 0.0
        w = min(abs(z) ** 2, 1.0)
        return w, (cmath.phase(z) if w else 0.0)

    def weight(self, i: int, j: int) -> float:
        return self.weight_phase(i, j)[0]

    def check_arity(self, schema_r: Schema, schema_s: Schema) -> None:
        if self.arity is not None and self.arity != (schema_r, schema_s):
            raise SchemaMismatch(f"similarity {self.name} expects schemas {self.arity[0]} and {self.arity[1]}")


def constant_similarity(value: complex, level: int = 1) -> SimilarityOp:
    return SimilarityOp(f"const({value})", lambda i, j: value, level, symmetric=True)


def equality_similarity(schema_r: Schema, field_r: str, schema_s: Schema, field_s: str) -> SimilarityOp:
    schema_r.position(field_r)
    schema_s.position(field_s)

    def fn(i, j):
        return 1.0 if field_value(schema_r, i, field_r) == field_value(schema_s, j, field_s) else 0.0

    return SimilarityOp(
        f"eq({field_r},{field_s})", fn, arity=(schema_r, schema_s), symmetric=schema_r == schema_s and field_r == field_s
    )


def within_similarity(
    schema_r: Schema, field_r: str, schema_s: Schema, field_s: str, k: float
) -> SimilarityOp:
    """Similarity ``1 - |a - b| / k`` clamped to [0, 1]."""
    if not k > 0:
        raise InvalidSimilarity(f"within() needs a positive scale, got {k}")
    schema_r.position(field_r)
    schema_s.position(field_s)

    def fn(i, j):
        d = abs(field_value(schema_r, i, field_r) - field_value(schema_s, j, field_s))
        return min(1.0, max(0.0, 1.0 - d / k))

    return SimilarityOp(
        f"within({field_r},{field_s},{k:g})", fn, arity=(schema_r, schema_s),
        symmetric=schema_r == schema_s and field_r == field_s,
    )


@dataclass(frozen=True)
class CombineOp:
    """Merges a tuple of r and a tuple of s into a tuple of ``out_schema``."""

    name: str
    schema_r: Schema
    schema_s: Schema
    out_schema: Schema
    fn: Callable[[int, int], int]

    def __call__(self, i: int, j: int) -> int:
        k = self.fn(i, j)
        if not 0 <= k < 1 << self.out_schema.total_bits:
            raise QrelError(f"combine {self.name} produced an invalid tuple {k}")
        return k


def concat_schema(schema_r: Schema, schema_s: Schema) -> tuple[Schema, list[str]]:
    """Schema of r's fields followed by s's; clashing s names get a ``_2`` suffix."""
    taken = set(schema_r.names)
    right = []
    for name, _ in schema_s.fields:
        new, n = name, 2
        while new in taken:
            new, n = f"{name}_{n}", n + 1
        taken.add(new)
        right.append(new)
    fields = list(schema_r.fields) + [(nm, w) for nm, (_, w) in zip(right, schema_s.fields)]
    return Schema(tuple(fields)), right


def concat(schema_r: Schema, schema_s: Schema) -> CombineOp:
    out, _ = concat_schema(schema_r, schema_s)
    cs = schema_s.total_bits
    return CombineOp("concat", schema_r, schema_s, out, lambda i, j: (i << cs) | j)


def permutation(schema_r: Schema, schema_s: Schema, names: Sequence[str]) -> CombineOp:
    """Concatenate, then keep ``names`` (fields of the concatenated schema) in that order."""
    full, _ = concat_schema(schema_r, schema_s)
    if len(set(names)) != len(names):
        raise QrelError("permutation list repeats a field")
    out = full.select(names)
    cs = schema_s.total_bits
    layout = [(full.shift(n), full.width(n)) for n in names]

    def fn(i, j):
        bits = (i << cs) | j
        k = 0
        for shift, width in layout:
            k = (k << width) | ((bits >> shift) & ((1 << width) - 1))
        return k

    return CombineOp(f"[{','.join(names)}]", schema_r, schema_s, out, fn)


def concat_drop(schema_r: Schema, schema_s: Schema, field_name: str) -> CombineOp:
    """Concatenate and drop s's copy of ``field_name``."""
    full, right = concat_schema(schema_r, schema_s)
    dropped = right[schema_s.position(field_name)]
    op = permutation(schema_r, schema_s, [n for n in full.names if n != dropped])
    return CombineOp(f"concat_drop({field_name})", schema_r, schema_s, op.out_schema, op.fn)


# -- selection ------------------------------------------------------------------


def optimal_iterations(f: float) -> int:
    """Grover rotation count floor((pi/4) * sqrt(1/f)) for marked fraction f."""
    if not 0 < f <= 1:
        raise InvalidFraction(f"marked fraction must be in (0, 1], got {f}")
    if f == 1:
        return 0
    return max(0, math.floor(math.pi / 4 * math.sqrt(1 / f)))


@dataclass
class SelectionReport:
    iterations: int
    marked_fraction: float
    final_success_probability: float
    amplitude_trace: list[tuple[int, float]]
    # Marked amplitude after every half step: start, flip, diffusion, flip, ...
    half_step_trace: list[float]
    grover_steps: int
    # Both readings of the generalized-selection cost, for reporting only.
    cost_sqrt_f: float = 0.0
    cost_sqrt_inverse_f: float = 0.0


def amplitude_of_marked(state: StateVector, predicate) -> float:
    """Probability mass on the basis states ``predicate`` marks."""
    mask = qstate.marked_mask(predicate, state.dim)
    return float(np.sum(state.probabilities()[mask]))


def grover_select(
    state: StateVector, predicate, iterations: Iterations = "auto"
) -> tuple[StateVector, SelectionReport]:
    """Amplify the marked subspace of ``state``.

    Each iteration flips the phase of marked basis states and then reflects
    about the input state. For a uniform input that reflection is the usual
    inversion about the mean; for any input it keeps the marked amplitudes
    proportional to their initial values.
    """
    mask = qstate.marked_mask(predicate, state.dim)
    f = float(np.sum(state.probabilities()[mask]))
    if f <= EMPTY_MASS_TOL:
        raise EmptySelection("predicate marks no probability mass")
    f = min(f, 1.0)
    k = optimal_iterations(f) if iterations == "auto" else int(iterations)
    if k < 0:
        raise QrelError(f"iterations must be non-negative, got {k}")

    marked_dir = np.where(mask, state.amplitudes, 0) / math.sqrt(f)

    def marked_amp(s: StateVector) -> float:
        return float(np.vdot(marked_dir, s.amplitudes).real)

    reference = state
    half = [marked_amp(state)]
    trace = [(0, half[0])]
    current = state
    for it in range(1, k + 1):
        current = qstate.apply_phase_flip(current, mask)
        half.append(marked_amp(current))
        current = qstate.apply_reflection(current, reference)
        half.append(marked_amp(current))
        trace.append((it, half[-1]))

    report = SelectionReport(
        iterations=k,
        marked_fraction=f,
        final_success_probability=float(np.sum(current.probabilities()[mask])),
        amplitude_trace=trace,
        half_step_trace=half,
        grover_steps=k * STEPS_PER_ITERATION,
        cost_sqrt_f=math.sqrt(f),
        cost_sqrt_inverse_f=math.sqrt(1 / f),
    )
    return current, report


def postselect(state: StateVector, schema: Schema, predicate) -> WeightedRelation:
    """Relation read from ``state`` conditioned on the marked subspace."""
    mask = qstate.marked_mask(predicate, state.dim)
    amps = state.amplitudes
    dist = {int(t): float(abs(amps[t]) ** 2) for t in np.flatnonzero(mask & (amps != 0))}
    phases = {t: cmath.phase(amps[t]) for t in dist}
    return relation_from_distribution(schema, dist, phases)


def state_to_relation(state: StateVector, schema: Schema) -> WeightedRelation:
    amps = state.amplitudes
    dist = {int(t): float(abs(amps[t]) ** 2) for t in np.flatnonzero(amps)}
    phases = {t: cmath.phase(amps[t]) for t in dist}
    return relation_from_distribution(schema, dist, phases)


# -- projection -------------------------------------------------------------------


def project(state: StateVector, schema: Schema, keep_fields: Sequence[str]) -> WeightedRelation:
    """Trace out every qubit outside ``keep_fields``; fields come out in the given order."""
    if not keep_fields:
        raise QrelError("projection needs at least one field")
    if len(set(keep_fields)) != len(keep_fields):
        raise QrelError("projection lists a field twice")
    if state.num_qubits != schema.total_bits:
        raise SchemaMismatch(f"state has {state.num_qubits} qubits, schema {schema} has {schema.total_bits} bits")
    out_schema = schema.select(keep_fields)
    qubits = sorted(q for name in keep_fields for q in schema.qubits(name))
    dist: dict[int, float] = {}
    for pattern, p in qstate.marginal_distribution(state, qubits).items():
        full = 0
        for j, q in enumerate(qubits):
            full |= ((pattern >> j) & 1) << q
        k = 0
        for name in keep_fields:
            k = (k << schema.width(name)) | field_value(schema, full, name)
        dist[k] = dist.get(k, 0.0) + p
    return relation_from_distribution(out_schema, dist)


# -- join --------------------------------------------------------------------------


def conditional_similarity(
    rel_a: WeightedRelation, rel_b: WeightedRelation, sim: SimilarityOp
) -> float:
    """Expected similarity weight of an independently drawn pair."""
    sim.check_arity(rel_a.schema, rel_b.schema)
    total = math.fsum(
        sim.weight(i, j) * pa * pb for i, pa in rel_a.rows.items() for j, pb in rel_b.rows.items()
    )
    return min(max(total, 0.0), 1.0)


@dataclass
class JoinReport:
    conditional_similarity: float
    quantum_steps: int
    classical_steps_reference: int
    iterations: int = 0
    success_probability: float = 0.0
    postselected: bool = True
    selection: SelectionReport | None = field(default=None, repr=False)


def join_register_size(schema_r: Schema, schema_s: Schema) -> int:
    return schema_r.total_bits + schema_s.total_bits + 1


def similarity_state(
    rel_r: WeightedRelation,
    rel_s: WeightedRelation,
    sim: SimilarityOp,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> StateVector:
    """Product state of r and s with the similarity rotated into an ancilla.

    Basis index is ``anc << (c_r + c_s) | i << c_s | j``; each populated pair
    (i, j) gets ``sqrt(1-w)|0> + sqrt(w) e^{i phi}|1>`` on the ancilla.
    """
    cr, cs = rel_r.schema.total_bits, rel_s.schema.total_bits
    n = cr + cs + 1
    if n > max_qubits:
        raise QubitBudgetExceeded(n, max_qubits, "join register")
    amp_r = prepare_state(rel_r, max_qubits).amplitudes
    amp_s = prepare_state(rel_s, max_qubits).amplitudes
    data = np.outer(amp_r, amp_s).ravel()
    w = np.zeros(data.shape[0])
    phi = np.zeros(data.shape[0])
    for i in rel_r.rows:
        for j in rel_s.rows:
            w[(i << cs) | j], phi[(i << cs) | j] = sim.weight_phase(i, j)
    anc0 = data * np.sqrt(1 - w)
    anc1 = data * np.sqrt(w) * np.exp(1j * phi)
    return StateVector(n, np.concatenate([anc0, anc1]), max_qubits=max_qubits)


def join_quantum(
    rel_r: WeightedRelation,
    rel_s: WeightedRelation,
    combine: CombineOp,
    sim: SimilarityOp,
    iterations: Iterations = "auto",
    *,
    postselect: bool = True,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> tuple[WeightedRelation, JoinReport]:
    """Generalized join through similarity encoding and amplitude amplification.

    With ``postselect`` the result is conditioned on ancilla=1. Without it the
    result is the distribution of combined tuples over every outcome, and the
    report's ``success_probability`` says how much of it came from similar pairs.
    """
    if (combine.schema_r, combine.schema_s) != (rel_r.schema, rel_s.schema):
        raise SchemaMismatch(f"combine {combine.name} does not accept these schemas")
    sim.check_arity(rel_r.schema, rel_s.schema)
    cr, cs = rel_r.schema.total_bits, rel_s.schema.total_bits
    state = similarity_state(rel_r, rel_s, sim, max_qubits)
    anc = 1 << (cr + cs)
    similar = np.arange(state.dim) >= anc

    c_rs = amplitude_of_marked(state, similar)
    if c_rs <= EMPTY_MASS_TOL:
        raise EmptyJoin("no pair of tuples is similar")
    final, sel = grover_select(state, similar, iterations)

    probs = final.probabilities()
    dist: dict[int, float] = {}
    for i in rel_r.rows:
        for j in rel_s.rows:
            base = (i << cs) | j
            mass = probs[base | anc] if postselect else probs[base | anc] + probs[base]
            if mass > 0:
                k = combine(i, j)
                dist[k] = dist.get(k, 0.0) + float(mass)
    result = relation_from_distribution(combine.out_schema, dist)
    report = JoinReport(
        conditional_similarity=c_rs,
        quantum_steps=sel.iterations * STEPS_PER_ITERATION,
        classical_steps_reference=len(rel_r) * len(rel_s),
        iterations=sel.iterations,
        success_probability=sel.final_success_probability,
        postselected=postselect,
        selection=sel,
    )
    return result, report
