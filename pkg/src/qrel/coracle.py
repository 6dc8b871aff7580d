"""Brute-force probabilistic relational algebra, used as ground truth.

Every function here works on probability maps directly and never touches a
state vector. Step counters follow idealized cost models: one comparison per
candidate row or pair, and ceil(log2 |s|) comparisons per sorted-index lookup.
"""

from __future__ import annotations

import bisect
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .errors import EmptyJoin, EmptySelection, NotPrimaryKey, SchemaMismatch
from .qops import CombineOp, SimilarityOp, concat
from .relation import WeightedRelation, field_value, relation_from_distribution


@dataclass
class StepCounter:
    comparisons: int = 0
    index_lookups: int = 0


def classical_select(
    rel: WeightedRelation, predicate: Callable[[int], bool]
) -> tuple[WeightedRelation, StepCounter]:
    counter = StepCounter()
    kept = {}
    for t, p in rel.rows.items():
        counter.comparisons += 1
        if predicate(t):
            kept[t] = p
    if not kept:
        raise EmptySelection("predicate matches no row")
    phases = {t: rel.phase(t) for t in kept}
    return relation_from_distribution(rel.schema, kept, phases), counter


def classical_project(rel: WeightedRelation, keep_fields: Sequence[str]) -> WeightedRelation:
    out_schema = rel.schema.select(keep_fields)
    dist: dict[int, float] = {}
    for t, p in rel.rows.items():
        k = 0
        for name in keep_fields:
            k = (k << rel.schema.width(name)) | field_value(rel.schema, t, name)
        dist[k] = dist.get(k, 0.0) + p
    return relation_from_distribution(out_schema, dist)


def classical_join(
    rel_r: WeightedRelation,
    rel_s: WeightedRelation,
    combine: CombineOp,
    sim: SimilarityOp,
) -> tuple[WeightedRelation, StepCounter]:
    """Weight every pair by similarity times both probabilities, then normalize."""
    if (combine.schema_r, combine.schema_s) != (rel_r.schema, rel_s.schema):
        raise SchemaMismatch(f"combine {combine.name} does not accept these schemas")
    sim.check_arity(rel_r.schema, rel_s.schema)
    counter = StepCounter()
    terms: dict[int, list[float]] = {}
    for i, pr in rel_r.rows.items():
        for j, ps in rel_s.rows.items():
            counter.comparisons += 1
            w = sim.weight(i, j)
            if w > 0:
                terms.setdefault(combine(i, j), []).append(w * pr * ps)
    c_rs = math.fsum(x for v in terms.values() for x in v)
    if c_rs <= 0:
        raise EmptyJoin("no pair of tuples is similar")
    dist = {k: math.fsum(v) / c_rs for k, v in terms.items()}
    return relation_from_distribution(combine.out_schema, dist), counter


def classical_equijoin_indexed(
    rel_r: WeightedRelation,
    rel_s: WeightedRelation,
    key_field: str,
    combine: CombineOp | None = None,
) -> tuple[WeightedRelation, StepCounter]:
    """Equijoin on ``key_field`` via a sorted index over s's key values.

    ``key_field`` must be a primary key of ``rel_s``. Each row of r costs one
    index lookup and ceil(log2 |s|) comparisons.
    """
    combine = combine or concat(rel_r.schema, rel_s.schema)
    keys = sorted((field_value(rel_s.schema, j, key_field), j) for j in rel_s.rows)
    key_values = [k for k, _ in keys]
    if len(set(key_values)) != len(key_values):
        raise NotPrimaryKey(f"{key_field!r} is not unique in the right-hand relation")
    rel_r.schema.position(key_field)

    counter = StepCounter()
    cost = math.ceil(math.log2(len(keys))) if len(keys) > 1 else 0
    dist: dict[int, float] = {}
    for i, pr in rel_r.rows.items():
        counter.index_lookups += 1
        counter.comparisons += cost
        v = field_value(rel_r.schema, i, key_field)
        pos = bisect.bisect_left(key_values, v)
        if pos < len(keys) and key_values[pos] == v:
            j = keys[pos][1]
            k = combine(i, j)
            dist[k] = dist.get(k, 0.0) + pr * rel_s.rows[j]
    if not dist:
        raise EmptyJoin("no key value appears in both relations")
    return relation_from_distribution(combine.out_schema, dist), counter


def compare_distributions(a: WeightedRelation, b: WeightedRelation) -> tuple[float, float]:
    """Total variation distance and largest pointwise probability gap."""
    if a.schema != b.schema:
        raise SchemaMismatch(f"cannot compare {a.schema} with {b.schema}")
    diffs = [abs(a.rows.get(t, 0.0) - b.rows.get(t, 0.0)) for t in set(a.rows) | set(b.rows)]
    return 0.5 * math.fsum(diffs), max(diffs, default=0.0)
