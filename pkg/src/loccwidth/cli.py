"""Batch front-end: validate/evaluate/compress protocols from JSON files.

Thin client over the same operations the HTTP service exposes. Reports go
to stdout as canonical JSON; exit code 1 flags a validation failure, 2 a
numerical degeneracy.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import ops
from .errors import ConvergenceFailure, LoccError, NoConvergence, NumericalDegeneracy
from .serialize import canonical_dumps


def _add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-completeness", type=float, default=None)
    p.add_argument("--tol-equalize", type=float, default=None)
    p.add_argument("--tol-rank", type=float, default=None)
    p.add_argument("--tol-null", type=float, default=None)
    p.add_argument("--tol-success-drift", type=float, default=None)
    p.add_argument("--timing", action="store_true", help="include wall time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locc-width",
        description="LOCC protocol trees: evaluation and width compression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check tree invariants")
    p.add_argument("path")
    _add_tolerance_flags(p)

    p = sub.add_parser("evaluate", help="discrimination success of a tree on an ensemble")
    p.add_argument("path")
    p.add_argument("ensemble_path")
    p.add_argument("--relabel", action="store_true", help="optimize leaf labels")
    _add_tolerance_flags(p)

    p = sub.add_parser("compress-m1", help="width compression preserving success")
    p.add_argument("path")
    p.add_argument("ensemble_path")
    p.add_argument("--out", help="write the compressed tree JSON here")
    _add_tolerance_flags(p)

    p = sub.add_parser("slim", help="convex decomposition into slim components")
    p.add_argument("path")
    p.add_argument("--cap", type=int, default=10_000, help="materialization cap")
    p.add_argument("--out", help="write components as JSON-lines here")
    p.add_argument("--reduce-rand", action="store_true", help="thin the mixture afterwards")
    _add_tolerance_flags(p)

    p = sub.add_parser("demo", help="run a built-in demo through the pipeline")
    p.add_argument("name", choices=["bell", "product-basis", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--dims", default="2,2", help="comma-separated party dimensions")
    p.add_argument("--out", help="write demo artifacts (tree/ensemble/compressed) here")
    _add_tolerance_flags(p)

    return parser


def _tols(args: argparse.Namespace) -> ops.Tolerances:
    base = ops.Tolerances()
    picked = {
        "completeness": args.tol_completeness,
        "equalize": args.tol_equalize,
        "rank": args.tol_rank,
        "null": args.tol_null,
        "success_drift": args.tol_success_drift,
    }
    return ops.Tolerances(**{k: v if v is not None else getattr(base, k) for k, v in picked.items()})


def _load(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(obj: dict) -> None:
    sys.stdout.write(canonical_dumps(obj) + "\n")


def _run(args: argparse.Namespace) -> int:
    tols = _tols(args)
    if args.command == "validate":
        report = ops.run_validate(_load(args.path), tols, args.timing)
        _emit(report)
        return 0 if report["status"] == "ok" else 1

    if args.command == "evaluate":
        report = ops.run_evaluate(
            _load(args.path), _load(args.ensemble_path), args.relabel, tols, args.timing
        )
        _emit(report)
        return 0 if report["status"] == "ok" else 1

    if args.command == "compress-m1":
        report, tree = ops.run_compress_m1(
            _load(args.path), _load(args.ensemble_path), tols, args.timing
        )
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(canonical_dumps(tree) + "\n")
        _emit(report)
        return 0 if report["status"] == "ok" else 1

    if args.command == "slim":
        report, records = ops.run_slim(
            _load(args.path), args.cap, args.reduce_rand, tols, args.timing
        )
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                for weight, payload in records or []:
                    fh.write(canonical_dumps({"lambda": weight, "tree": payload}) + "\n")
                fh.write(canonical_dumps({"summary": report}) + "\n")
        _emit(report)
        return 0 if report["status"] in ("ok", "cap_exceeded") else 1

    if args.command == "demo":
        dims = tuple(int(d) for d in args.dims.split(","))
        report, artifacts = ops.run_demo(
            args.name, seed=args.seed, rounds=args.rounds, dims=dims, tols=tols, timing=args.timing
        )
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(canonical_dumps(artifacts) + "\n")
        _emit(report)
        return 0 if report["status"] == "ok" else 1

    raise AssertionError(f"unhandled command {args.command}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (NumericalDegeneracy, ConvergenceFailure, NoConvergence) as exc:
        _emit(ops.error_object(exc))
        return 2
    except (LoccError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        _emit(ops.error_object(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
