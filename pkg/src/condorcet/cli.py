"""Command-line entry point: ``condorcet {generate,hardness,run,summarize}``."""
from __future__ import annotations

import argparse
import json
import sys

from . import complexity, env, harness
from .errors import CondorcetError, NoCondorcetWinnerError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_CW = 3


def _load_json_arg(text: str) -> dict:
    """Inline JSON object or path to a JSON file."""
    if text.lstrip().startswith("{"):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def _write_or_print(obj, path) -> None:
    if path:
        harness.write_json(obj, path)
    else:
        print(json.dumps(obj, indent=2, sort_keys=True))


def _cap(text: str):
    return None if text.lower() == "none" else float(text)


def cmd_generate(args) -> int:
    inst_id, matrix = harness.build_instance(_load_json_arg(args.spec))
    env.save_matrix(matrix, args.output)
    report = env.validate(matrix)
    print(f"{inst_id}: K={matrix.k} cw={None if report.cw is None else report.cw + 1} -> {args.output}")
    return EXIT_OK


def cmd_hardness(args) -> int:
    matrix = env.load_matrix(args.matrix)
    report = complexity.hardness_report(matrix, args.delta, args.cap)
    _write_or_print(report, args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    config = harness.ExperimentConfig.from_json(args.config)
    csv_path = args.csv or config.output_csv or "runs.csv"
    json_path = args.json or config.output_json or "summary.json"
    table = harness.run_experiment(config, workers=args.workers)
    _, matrix = harness.build_instance(config.instance)
    summary = harness.summarize(table, matrix, config.delta)
    harness.emit(table, summary, csv_path, json_path, config)
    for row in summary:
        print(f"{row['algorithm']} param={row['param']}: error={row['error_rate']:.4f} "
              f"(CP95 {row['clopper_pearson_95_upper']:.4f}) median budget={row['budget_median']}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    table = harness.read_csv(args.csv)
    matrix = env.load_matrix(args.matrix)
    summary = harness.summarize(table, matrix, args.delta, args.cap)
    _write_or_print({"summary": summary}, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condorcet", description="Condorcet-winner identification experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build an instance and write its matrix JSON")
    p.add_argument("spec", help="instance spec as inline JSON or a JSON file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("hardness", help="hardness quantities of a matrix")
    p.add_argument("matrix")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--cap", type=_cap, default=1 / 8, help="sparsity cap fraction, or 'none'")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_hardness)

    p = sub.add_parser("run", help="run an experiment config, write CSV and JSON")
    p.add_argument("config")
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--workers", type=int, help="process count (default $CONDORCET_THREADS or 1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("summarize", help="summarize a run CSV")
    p.add_argument("csv")
    p.add_argument("--matrix", required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--cap", type=_cap, default=1 / 8)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoCondorcetWinnerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CW
    except (CondorcetError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
