import math

import numpy as np
import pytest

from qrel import qops
from qrel.relation import Schema, WeightedRelation, decode_tuple

R_SCHEMA = Schema.of(("k", 2), ("a", 1))
S_SCHEMA = Schema.of(("k", 2), ("b", 1))


def random_relation(rng, schema, max_rows=8):
    n = int(rng.integers(1, max_rows + 1))
    rows = rng.choice(1 << schema.total_bits, size=n, replace=False)
    p = rng.dirichlet(np.ones(n))
    return WeightedRelation(schema, {int(t): float(x) for t, x in zip(rows, p)})


def table_similarity(rng, rel_r, rel_s, level=1, zero_fraction=0.3):
    """Similarity backed by a random lookup table over the populated pairs."""
    table = {}
    for i in rel_r.rows:
        for j in rel_s.rows:
            w = 0.0 if rng.random() < zero_fraction else float(rng.random())
            if level == 2:
                w = w * complex(math.cos(theta := rng.uniform(-math.pi, math.pi)), math.sin(theta))
            table[i, j] = w
    return qops.SimilarityOp("table", lambda i, j: table.get((i, j), 0.0), level)


def random_combine(rng, schema_r, schema_s):
    choice = int(rng.integers(0, 4))
    if choice == 0:
        return qops.concat(schema_r, schema_s)
    if choice == 1:
        return qops.concat_drop(schema_r, schema_s, "k")
    if choice == 2:
        return qops.permutation(schema_r, schema_s, ["b", "k"])
    return qops.permutation(schema_r, schema_s, ["a"])


def random_join_instance(rng, level=1):
    """(r, s, combine, sim) with at least one similar pair."""
    while True:
        r = random_relation(rng, R_SCHEMA)
        s = random_relation(rng, S_SCHEMA)
        sim = table_similarity(rng, r, s, level)
        if any(sim.weight(i, j) > 0 for i in r.rows for j in s.rows):
            return r, s, random_combine(rng, R_SCHEMA, S_SCHEMA), sim


def naive_joinprob(rel_r, rel_s, combine, sim):
    """Independent transcription of the join probability formula over decoded values."""
    numer = {}
    c = 0.0
    for i, pi in rel_r.rows.items():
        for j, pj in rel_s.rows.items():
            term = sim.weight(i, j) * pi * pj
            c += term
            if term > 0:
                key = decode_tuple(combine.out_schema, combine(i, j))
                numer[key] = numer.get(key, 0.0) + term
    return {k: v / c for k, v in numer.items()}, c


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance summary --------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n, text = marker.args
    ok = call.excinfo is None
    prev = _criteria.get(n, (text, True))
    _criteria[n] = (text, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        text, ok = _criteria[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}")
