"""Command line entry point.

    dualgen <mode> <scenario.json> [--seed N] [--out DIR] [--tol X] [--paths N]

Modes: dual, verify-matrix, mc, self-dual-check.  Flags override the
corresponding scenario fields; --tol overrides the mode's governing
tolerance (z_max for mc, residual_max for verify-matrix).  Exit code 0
means every declared tolerance was met, 1 means a check failed, 2 means
the scenario could not be run.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import DualgenError
from .scenario import MODES, load_scenario, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualgen",
        description="Construct and verify dual Markov processes.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a scenario in {mode} mode")
        p.add_argument("scenario", help="path to a scenario JSON file")
        p.add_argument("--seed", type=int, default=None,
                       help="override path_config.seed")
        p.add_argument("--out", default=None,
                       help="override the report output directory")
        p.add_argument("--tol", type=float, default=None,
                       help="override the governing tolerance")
        p.add_argument("--paths", type=int, default=None,
                       help="override path_config.n_paths")
    return parser


def _apply_overrides(data: dict, args) -> dict:
    data = json.loads(json.dumps(data))
    data["mode"] = args.mode
    if args.seed is not None or args.paths is not None:
        pc = data.setdefault("path_config", {})
        if args.seed is not None:
            pc["seed"] = args.seed
        if args.paths is not None:
            pc["n_paths"] = args.paths
    if args.tol is not None:
        tol = data.setdefault("tolerances", {})
        key = "residual_max" if args.mode == "verify-matrix" else "z_max"
        tol[key] = args.tol
    if args.out is not None:
        data["output_dir"] = args.out
    return data


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        scenario = load_scenario(_apply_overrides(scenario.data, args))
        report = run_scenario(scenario)
    except DualgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status = "pass" if report["pass"] else "FAIL"
    print(f"{report['scenario']} [{report['mode']}]: {status}")
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
