"""Command line entry point: ``qrel run <query-file> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import QrelError
from ..qstate import DEFAULT_MAX_QUBITS
from .executor import MODES, ResultDocument, execute
from .parser import parse
from .planner import PlanConfig, plan


def _iterations(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a non-negative integer") from None
    if k < 0:
        raise argparse.ArgumentTypeError("iterations must be non-negative")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrel", description="Quantum relational database simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a query script")
    run.add_argument("query_file", type=Path)
    run.add_argument("--mode", choices=MODES, default="quantum")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--iterations", type=_iterations, default="auto", help="auto or K")
    run.add_argument("--similarity-level", type=int, choices=(1, 2), default=1)
    run.add_argument("--postselect", choices=("on", "off"), default="on")
    run.add_argument("--max-qubits", type=int, default=DEFAULT_MAX_QUBITS)
    run.add_argument("--out", type=Path, help="write the result document here instead of stdout")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_query(
    source: str,
    *,
    base_dir: Path = Path("."),
    mode: str = "quantum",
    seed: int = 0,
    iterations: int | str = "auto",
    similarity_level: int = 1,
    postselect: bool = True,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> ResultDocument:
    """Parse, plan and execute a query; every query error lands in the document."""
    config = PlanConfig(max_qubits, iterations, similarity_level, postselect, base_dir)
    try:
        query_plan = plan(parse(source), config)
    except QrelError as e:
        doc = ResultDocument(mode, seed)
        doc.error = e
        return doc
    return execute(query_plan, mode, seed)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        source = args.query_file.read_text()
    except OSError as e:
        print(f"qrel: cannot read {args.query_file}: {e.strerror}", file=sys.stderr)
        return 2
    doc = run_query(
        source,
        base_dir=args.query_file.parent,
        mode=args.mode,
        seed=args.seed,
        iterations=args.iterations,
        similarity_level=args.similarity_level,
        postselect=args.postselect == "on",
        max_qubits=args.max_qubits,
    )
    text = doc.render()
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if doc.error is not None:
        print(f"qrel: {doc.error.kind}: {doc.error.message}", file=sys.stderr)
    return doc.exit_code


if __name__ == "__main__":
    sys.exit(main())
