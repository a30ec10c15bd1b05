"""Command line front end for batch equilibrium solves.

Subcommands:

    gnepoly solve MANIFEST [--seed N] [--max-order N] [--epsilon X]
                            [--rank-tol X] [--sdp-tol X] [--out PATH]
                            [--export-sdp DIR]
    gnepoly corpus [list | run ENTRY ...]

Every flag is mirrored by an environment variable with the GNEPOLY_ prefix
(GNEPOLY_SEED, GNEPOLY_MAX_ORDER, GNEPOLY_EPSILON, GNEPOLY_RANK_TOL,
GNEPOLY_SDP_TOL, GNEPOLY_OUT); explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .corpus import corpus_description, corpus_list, corpus_manifest_path
from .run import EXIT_INPUT_ERROR, ManifestError, RunResult, load_manifest, run_manifest

_ENV_PREFIX = "GNEPOLY_"


def _env_default(name, cast):
    raw = os.environ.get(_ENV_PREFIX + name)
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"bad value for {_ENV_PREFIX}{name}: {raw!r}")


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=_env_default("SEED", int),
                   help="seed for the random objective and extraction")
    p.add_argument("--max-order", type=int,
                   default=_env_default("MAX_ORDER", int),
                   help="relaxation order cap as increment over the base order")
    p.add_argument("--epsilon", type=float,
                   default=_env_default("EPSILON", float),
                   help="denominator margin for the exclusion restart")
    p.add_argument("--rank-tol", type=float,
                   default=_env_default("RANK_TOL", float),
                   help="singular value cutoff for flat truncation")
    p.add_argument("--sdp-tol", type=float,
                   default=_env_default("SDP_TOL", float),
                   help="target tolerance handed to the SDP solver")
    p.add_argument("--out", type=Path,
                   default=_env_default("OUT", Path),
                   help="write the report to this path")
    p.add_argument("--export-sdp", type=Path, metavar="DIR",
                   help="export the moment relaxations in sparse SDP text form")


def _overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.max_order is not None:
        out["max_order_increment"] = args.max_order
    if args.epsilon is not None:
        out["epsilon"] = args.epsilon
    if args.rank_tol is not None:
        out["rank_tol"] = args.rank_tol
    if args.sdp_tol is not None:
        out["sdp_tol"] = args.sdp_tol
    return out


def _execute(manifest_path: Path, args) -> int:
    try:
        manifest = load_manifest(manifest_path)
    except (ManifestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if args.out is not None:
        manifest.out_path = args.out
        manifest.base_dir = Path.cwd()
    result: RunResult = run_manifest(manifest, _overrides(args),
                                     export_dir=args.export_sdp)
    if result.error is not None:
        print(f"error: {result.error}", file=sys.stderr)
        return result.exit_code
    if result.report is not None:
        rep = result.report
        print(f"outcome: {rep.outcome}")
        if rep.u is not None:
            print("u:", " ".join(f"{v:.4f}" for v in rep.u))
        if rep.q_values:
            print("q:", " ".join(f"{v:.4f}" for v in rep.q_values))
        for i, d in sorted(rep.deltas.items()):
            print(f"delta[{i}]:", "unresolved" if d is None else f"{d:.4g}")
        print(f"orders: {rep.orders_used}  restarts: {rep.restarts}  "
              f"time: {rep.total_seconds:.2f}s")
        if manifest.out_path is not None:
            print(f"report: {manifest.out_path}")
    return result.exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gnepoly",
        description="equilibrium solver for convex polynomial games")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a manifest")
    p_solve.add_argument("manifest", type=Path)
    _add_run_flags(p_solve)

    p_corpus = sub.add_parser("corpus", help="list or run bundled examples")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_command", required=True)
    corpus_sub.add_parser("list", help="print bundled example identifiers")
    p_run = corpus_sub.add_parser("run", help="run bundled examples")
    p_run.add_argument("entries", nargs="+", metavar="ENTRY")
    _add_run_flags(p_run)

    args = parser.parse_args(argv)
    if args.command == "solve":
        return _execute(args.manifest, args)
    if args.corpus_command == "list":
        for entry in corpus_list():
            print(f"{entry:18s} {corpus_description(entry)}")
        return 0
    worst = 0
    for entry in args.entries:
        try:
            path = corpus_manifest_path(entry)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_INPUT_ERROR
        print(f"== {entry}")
        worst = max(worst, _execute(path, args))
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
