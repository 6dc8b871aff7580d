"""Relations, their bit-level tuple encoding, and quantum state preparation.

Tuple layout: the first declared field occupies the most significant bits of
the c-bit pattern, the last field the least significant bits. Because qubit 0
is the least significant bit of a basis index, the last field sits on the
lowest-numbered qubits.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import qstate
from .errors import (
    FieldOverflow,
    QrelError,
    QubitBudgetExceeded,
    RelationFormatError,
    SchemaMismatch,
    UnknownField,
    ZeroNorm,
)
from .qstate import DEFAULT_MAX_QUBITS, StateVector

PROB_TOL = 1e-10
# Rows whose recomputed probability falls below this are treated as cancelled.
DROP_TOL = 1e-24


@dataclass(frozen=True)
class Schema:
    fields: tuple[tuple[str, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple((str(n), int(w)) for n, w in self.fields))
        if not self.fields:
            raise QrelError("a schema needs at least one field")
        names = [n for n, _ in self.fields]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise QrelError(f"duplicate field names: {', '.join(dupes)}")
        for name, width in self.fields:
            if width < 1:
                raise QrelError(f"field {name!r} must be at least one bit wide")

    @classmethod
    def of(cls, *fields: tuple[str, int]) -> Schema:
        return cls(tuple(fields))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.fields)

    @property
    def total_bits(self) -> int:
        return sum(w for _, w in self.fields)

    def width(self, name: str) -> int:
        return self.fields[self.position(name)][1]

    def position(self, name: str) -> int:
        for i, (n, _) in enumerate(self.fields):
            if n == name:
                return i
        raise UnknownField(name, self.names)

    def shift(self, name: str) -> int:
        """Bit offset of the field's least significant bit."""
        pos = self.position(name)
        return sum(w for _, w in self.fields[pos + 1 :])

    def qubits(self, name: str) -> tuple[int, ...]:
        s = self.shift(name)
        return tuple(range(s, s + self.width(name)))

    def select(self, names: Sequence[str]) -> Schema:
        return Schema(tuple((n, self.width(n)) for n in names))

    def check_budget(self, max_qubits: int) -> None:
        if self.total_bits > max_qubits:
            raise QubitBudgetExceeded(self.total_bits, max_qubits, "schema")

    def __str__(self):
        return ",".join(f"{n}:{w}" for n, w in self.fields)


def encode_tuple(schema: Schema, values: Sequence[int]) -> int:
    if len(values) != len(schema.fields):
        raise QrelError(f"expected {len(schema.fields)} values, got {len(values)}")
    bits = 0
    for (name, width), v in zip(schema.fields, values):
        v = int(v)
        if v < 0 or v >= 1 << width:
            raise FieldOverflow(name, v, width)
        bits = (bits << width) | v
    return bits


def decode_tuple(schema: Schema, bits: int) -> tuple[int, ...]:
    if not 0 <= bits < 1 << schema.total_bits:
        raise QrelError(f"bit pattern {bits} out of range for a {schema.total_bits}-bit schema")
    out = []
    for _, width in reversed(schema.fields):
        out.append(bits & ((1 << width) - 1))
        bits >>= width
    return tuple(reversed(out))


def field_value(schema: Schema, bits: int, name: str) -> int:
    return (bits >> schema.shift(name)) & ((1 << schema.width(name)) - 1)


@dataclass(frozen=True)
class WeightedRelation:
    """A relation whose tuples carry probabilities (and optional phases).

    ``rows`` maps encoded tuple bits to probability. Phases are in radians;
    rows without an entry in ``phases`` have phase 0.
    """

    schema: Schema
    rows: Mapping[int, float]
    phases: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        rows = {int(t): float(p) for t, p in self.rows.items()}
        limit = 1 << self.schema.total_bits
        for t, p in rows.items():
            if not 0 <= t < limit:
                raise QrelError(f"tuple bits {t} out of range for schema {self.schema}")
            if not p > 0:
                raise QrelError(f"row {decode_tuple(self.schema, t)} has non-positive probability {p}")
        total = math.fsum(rows.values())
        if abs(total - 1.0) > PROB_TOL:
            raise QrelError(f"probabilities sum to {total!r}, not 1")
        phases = {int(t): float(ph) for t, ph in self.phases.items() if ph != 0}
        stray = set(phases) - set(rows)
        if stray:
            raise QrelError(f"phases given for absent rows: {sorted(stray)}")
        object.__setattr__(self, "rows", dict(sorted(rows.items())))
        object.__setattr__(self, "phases", dict(sorted(phases.items())))

    @classmethod
    def from_values(
        cls,
        schema: Schema,
        rows: Iterable[Sequence[int]] | Mapping[Sequence[int], float],
        phases: Mapping[Sequence[int], float] | None = None,
    ) -> WeightedRelation:
        """Build from per-field value tuples; a plain iterable means uniform weights."""
        if isinstance(rows, Mapping):
            weighted = {encode_tuple(schema, v): p for v, p in rows.items()}
        else:
            keys = [encode_tuple(schema, v) for v in rows]
            if len(set(keys)) != len(keys):
                raise QrelError("duplicate rows")
            weighted = {k: 1 / len(keys) for k in keys}
        ph = {encode_tuple(schema, v): a for v, a in (phases or {}).items()}
        return cls(schema, weighted, ph)

    @classmethod
    def from_amplitudes(cls, schema: Schema, amps: Mapping[int, complex]) -> WeightedRelation:
        """Renormalize an amplitude map into a relation; ZeroNorm if it is all zero."""
        probs = {t: abs(a) ** 2 for t, a in amps.items()}
        total = math.fsum(probs.values())
        if total <= DROP_TOL:
            raise ZeroNorm("amplitudes cancel exactly")
        rows = {t: p / total for t, p in probs.items() if p / total > DROP_TOL}
        phases = {t: cmath.phase(amps[t]) for t in rows}
        return cls(schema, _fix_sum(rows), phases)

    def __len__(self):
        return len(self.rows)

    def phase(self, t: int) -> float:
        return self.phases.get(t, 0.0)

    def amplitude(self, t: int) -> complex:
        p = self.rows.get(t, 0.0)
        return math.sqrt(p) * cmath.exp(1j * self.phase(t)) if p else 0j

    def values(self) -> list[tuple[int, ...]]:
        return [decode_tuple(self.schema, t) for t in self.rows]

    def as_value_dict(self) -> dict[tuple[int, ...], float]:
        return {decode_tuple(self.schema, t): p for t, p in self.rows.items()}


def _fix_sum(rows: dict[int, float]) -> dict[int, float]:
    """Rescale so the probabilities sum to one to float accuracy."""
    total = math.fsum(rows.values())
    return {t: p / total for t, p in rows.items()}


def relation_from_distribution(
    schema: Schema, dist: Mapping[int, float], phases: Mapping[int, float] | None = None
) -> WeightedRelation:
    """Relation from a (possibly slightly unnormalized) probability map; drops ~zero rows."""
    rows = {t: p for t, p in dist.items() if p > DROP_TOL}
    if not rows:
        raise ZeroNorm("distribution has no mass")
    rows = _fix_sum(rows)
    ph = {t: a for t, a in (phases or {}).items() if t in rows}
    return WeightedRelation(schema, rows, ph)


def prepare_state(rel: WeightedRelation, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    c = rel.schema.total_bits
    if c > max_qubits:
        raise QubitBudgetExceeded(c, max_qubits, "relation state")
    amps = np.zeros(1 << c, dtype=np.complex128)
    for t in rel.rows:
        amps[t] = rel.amplitude(t)
    return StateVector(c, amps, max_qubits=max_qubits)


def mix_combine(rel_a: WeightedRelation, rel_b: WeightedRelation) -> WeightedRelation:
    """Equal-weight amplitude superposition of two relations, renormalized."""
    if rel_a.schema != rel_b.schema:
        raise SchemaMismatch(f"cannot mix {rel_a.schema} with {rel_b.schema}")
    amps = {}
    for t in sorted(set(rel_a.rows) | set(rel_b.rows)):
        amps[t] = (rel_a.amplitude(t) + rel_b.amplitude(t)) / math.sqrt(2)
    return WeightedRelation.from_amplitudes(rel_a.schema, amps)


def mix_network(singletons: Sequence[WeightedRelation]) -> tuple[WeightedRelation, int]:
    """Combine 2**N relations pairwise in a balanced tree.

    Returns the combined relation and the tree depth N.
    """
    n = len(singletons)
    if n == 0 or n & (n - 1):
        raise QrelError(f"a MIX network needs a power-of-two number of inputs, got {n}")
    schema = singletons[0].schema
    if any(r.schema != schema for r in singletons):
        raise SchemaMismatch("all MIX network inputs must share one schema")
    layer = list(singletons)
    depth = 0
    while len(layer) > 1:
        layer = [mix_combine(layer[i], layer[i + 1]) for i in range(0, len(layer), 2)]
        depth += 1
    return layer[0], depth


def sample_oracle(
    rel: WeightedRelation,
    shots: int,
    rng_seed: int,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> list[int]:
    """Draw tuples by copying the data register onto fresh ancillas and measuring them.

    Data sits on qubits [c, 2c), ancillas on [0, c). Every shot prepares the
    same state, so the ancilla marginal is computed once and sampled ``shots``
    times with a seeded generator.
    """
    if shots < 1:
        raise QrelError("shots must be at least 1")
    c = rel.schema.total_bits
    if 2 * c > max_qubits:
        raise QubitBudgetExceeded(2 * c, max_qubits, "sampling oracle")
    amps = np.zeros(1 << (2 * c), dtype=np.complex128)
    for t in rel.rows:
        amps[t << c] = rel.amplitude(t)
    state = StateVector(2 * c, amps, max_qubits=max_qubits)
    copied = qstate.apply_cnot_copy(state, range(c, 2 * c), range(c))
    dist = qstate.marginal_distribution(copied, range(c))
    outcomes = np.array(sorted(dist), dtype=np.int64)
    p = np.array([dist[o] for o in outcomes])
    rng = np.random.default_rng(rng_seed)
    draws = rng.choice(outcomes, size=shots, p=p / p.sum())
    return [int(d) for d in draws]


# -- relation file format ----------------------------------------------------


def parse_schema(text: str) -> Schema:
    fields = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, sep, width = part.partition(":")
        name = name.strip()
        if not sep or not name.isidentifier():
            raise QrelError(f"bad field declaration {part!r}, expected name:width")
        try:
            fields.append((name, int(width)))
        except ValueError:
            raise QrelError(f"bad width in {part!r}") from None
    return Schema(tuple(fields))


def loads_relation(text: str, path: str | None = None) -> WeightedRelation:
    schema = None
    entries = []  # (line, bits, prob or None, phase)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if schema is None:
            key, sep, rest = line.partition(":")
            if not sep or key.strip() != "schema":
                raise RelationFormatError("first line must be 'schema: name:width,...'", lineno, path)
            try:
                schema = parse_schema(rest)
            except QrelError as e:
                raise RelationFormatError(e.message, lineno, path) from None
            continue
        head, *attrs = line.split("@")
        try:
            values = [int(v) for v in head.split(",")]
        except ValueError:
            raise RelationFormatError(f"bad row {head.strip()!r}", lineno, path) from None
        if any(v < 0 for v in values):
            raise RelationFormatError("field values must be unsigned", lineno, path)
        if len(values) != len(schema.fields):
            raise RelationFormatError(
                f"row has {len(values)} values, schema has {len(schema.fields)} fields", lineno, path
            )
        try:
            bits = encode_tuple(schema, values)
        except FieldOverflow as e:
            e.message = f"{path or '<relation>'}:{lineno}: {e.message}"
            e.args = (e.message,)
            raise
        prob, phase = None, 0.0
        for attr in attrs:
            key, sep, val = attr.strip().partition("=")
            try:
                if key == "p" and sep:
                    prob = float(val)
                elif key == "phase" and sep:
                    phase = float(val)
                else:
                    raise ValueError
            except ValueError:
                raise RelationFormatError(f"bad attribute '@{attr.strip()}'", lineno, path) from None
        if prob is not None and not (0 < prob <= 1):
            raise RelationFormatError(f"probability {prob} outside (0, 1]", lineno, path)
        entries.append((lineno, bits, prob, phase))
    if schema is None:
        raise RelationFormatError("missing schema line", None, path)
    if not entries:
        raise RelationFormatError("relation has no rows", None, path)

    seen = {}
    for lineno, bits, _, _ in entries:
        if bits in seen:
            raise RelationFormatError(
                f"duplicate row {decode_tuple(schema, bits)} (first on line {seen[bits]})", lineno, path
            )
        seen[bits] = lineno

    explicit = math.fsum(p for _, _, p, _ in entries if p is not None)
    unweighted = [e for e in entries if e[2] is None]
    if unweighted:
        rest = 1.0 - explicit
        if rest <= PROB_TOL:
            raise RelationFormatError("no probability mass left for unweighted rows", None, path)
        share = rest / len(unweighted)
    elif abs(explicit - 1.0) > PROB_TOL:
        raise RelationFormatError(f"probabilities sum to {explicit!r}, not 1", None, path)
    rows = {bits: (share if p is None else p) for _, bits, p, _ in entries}
    phases = {bits: ph for _, bits, _, ph in entries}
    return WeightedRelation(schema, rows, phases)


def load_relation(path: str | Path) -> WeightedRelation:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise RelationFormatError(f"cannot read relation file: {e.strerror}", None, str(path)) from None
    return loads_relation(text, str(path))


def dumps_relation(rel: WeightedRelation) -> str:
    """Serialize with every probability explicit; ``repr`` floats round-trip exactly."""
    lines = [f"schema: {rel.schema}"]
    for t, p in rel.rows.items():
        row = ",".join(str(v) for v in decode_tuple(rel.schema, t)) + f" @p={p!r}"
        ph = rel.phase(t)
        if ph:
            row += f" @phase={ph!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def save_relation(rel: WeightedRelation, path: str | Path) -> None:
    Path(path).write_text(dumps_relation(rel))
