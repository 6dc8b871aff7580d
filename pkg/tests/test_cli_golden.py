"""Byte-exact golden outputs for the query corpus.

Regenerate after an intentional output change with
``QREL_UPDATE_GOLDEN=1 pytest tests/test_cli_golden.py``.
"""

import os
import subprocess
import sys
from pathlib import Path

import pytest

from qrel.dsl.cli import main

CORPUS = Path(__file__).parent / "corpus"
GOLDEN = CORPUS / "golden"
UPDATE = os.environ.get("QREL_UPDATE_GOLDEN") == "1"

# (query script, extra CLI arguments, expected exit code)
CASES = [
    ("01_load", ["--mode", "both"], 0),
    ("02_select", ["--mode", "both"], 0),
    ("02_select", ["--mode", "quantum", "--postselect", "off"], 0),
    ("03_select_bool", ["--mode", "both", "--iterations", "2"], 0),
    ("04_project", ["--mode", "both"], 0),
    ("05_equijoin", ["--mode", "both"], 0),
    ("05_equijoin", ["--mode", "classical"], 0),
    ("06_within_join", ["--mode", "both", "--similarity-level", "2"], 0),
    ("06_within_join", ["--mode", "quantum", "--postselect", "off"], 0),
    ("07_join_project", ["--mode", "both"], 0),
    ("08_sample", ["--mode", "quantum", "--seed", "7"], 0),
    ("08_sample", ["--mode", "both", "--seed", "7"], 0),
    ("09_sample_select", ["--mode", "both", "--seed", "11"], 0),
    ("10_empty_join", ["--mode", "both"], 2),
    ("11_overflow", ["--mode", "quantum"], 2),
    ("12_budget", ["--mode", "quantum"], 3),
    ("05_equijoin", ["--mode", "quantum", "--max-qubits", "9"], 3),
    ("13_syntax", [], 2),
    ("14_unknown_field", [], 2),
    ("15_empty_select", ["--mode", "both"], 2),
    ("16_const_join", ["--mode", "both"], 0),
]


def golden_name(query, args):
    suffix = "_".join(a.lstrip("-") for a in args) or "default"
    return f"{query}__{suffix}.out"


@pytest.mark.parametrize("query,args,code", CASES, ids=[golden_name(q, a)[:-4] for q, a, _ in CASES])
def test_golden(query, args, code, tmp_path):
    out = tmp_path / "result.txt"
    rc = main(["run", str(CORPUS / f"{query}.qry"), *args, "--out", str(out)])
    assert rc == code
    text = out.read_text()
    golden = GOLDEN / golden_name(query, args)
    if UPDATE:
        golden.write_text(text)
    assert text == golden.read_text()
    # a second run must be byte-identical as well
    rc2 = main(["run", str(CORPUS / f"{query}.qry"), *args, "--out", str(out)])
    assert rc2 == code and out.read_text() == text


def test_corpus_covers_required_paths():
    text = "".join(p.read_text() for p in GOLDEN.glob("*.out"))
    for kind in ("EmptyJoin", "FieldOverflow", "QubitBudgetExceeded"):
        assert f"kind = {kind}" in text
    queries = {q for q, _, _ in CASES}
    assert len(queries) >= 10


def test_subprocess_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qrel", "run", str(CORPUS / "12_budget.qry")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3
    assert "kind = QubitBudgetExceeded" in proc.stdout
    assert "QubitBudgetExceeded" in proc.stderr
