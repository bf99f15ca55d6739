"""Command-line entry point.

    fwal run <config.json> [--out DIR] [--seeds N] [--solvers cg,ascg,sfw,mwal] [--jobs N]
    fwal verify [--battery FILE] [--report FILE]
    fwal enumerate <mdp.json> [--out FILE]

Exit status: 0 on success, 2 on invalid input, 3 when verification fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from fwal.harness.config import SOLVER_NAMES, ConfigError, SolverSpec, load_config

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 3


def _parse_solvers(raw: str) -> list[str]:
    names = [s.strip() for s in raw.split(",") if s.strip()]
    bad = [n for n in names if n not in SOLVER_NAMES]
    if bad or not names:
        raise ConfigError(f"--solvers: unknown solver(s) {', '.join(bad) or '(none given)'}; choose from {', '.join(SOLVER_NAMES)}")
    return names


def cmd_run(args) -> int:
    from fwal.harness.runner import run_experiment

    cfg = load_config(args.config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        cfg = cfg.with_overrides(n_seeds=args.seeds)
    if args.solvers:
        names = _parse_solvers(args.solvers)
        known = {s.name: s for s in cfg.solvers}
        cfg = cfg.with_overrides(solvers=tuple(known.get(n, SolverSpec(n)) for n in names))
    if args.jobs is not None:
        cfg = cfg.with_overrides(jobs=max(1, args.jobs))
    result = run_experiment(cfg, args.out)
    for name, value in json.loads((result.out_dir / "results.json").read_text())["mean_final_dist"].items():
        print(f"{name}: mean final distance {value:.6g}")
    print(f"wrote {result.out_dir}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from fwal.harness.verify import verify_suite

    battery = None
    if args.battery:
        try:
            battery = json.loads(Path(args.battery).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.battery}: {exc}") from exc
    report = verify_suite(battery)
    text = json.dumps(report, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    for name, res in report["checks"].items():
        print(f"{'PASS' if res['passed'] else 'FAIL'} {name} ({res['instances'] - res['failures']}/{res['instances']})")
    if not args.report and not report["passed"]:
        sys.stdout.write(json.dumps(report["failures"], indent=2) + "\n")
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


def cmd_enumerate(args) -> int:
    from fwal.mdp import MdpSpec
    from fwal.polytope import UnsupportedDimensionError, enumerate_polytope, facial_distance_2d

    mdp = MdpSpec.load(args.mdp)
    model = enumerate_polytope(mdp)
    if mdp.k == 2 and len(model) >= 2:
        try:
            model.facial_distance = facial_distance_2d(model)
        except UnsupportedDimensionError:
            pass
    text = json.dumps(model.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(model)} vertices, diameter {model.diameter:.6g}; wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fwal", description="Frank-Wolfe apprenticeship learning benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="run directory (default: output_dir from the config)")
    r.add_argument("--seeds", type=int, help="number of seeds")
    r.add_argument("--solvers", help="comma-separated subset of cg,ascg,sfw,mwal")
    r.add_argument("--jobs", type=int, help="worker processes")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run the tiny-MDP verification battery")
    v.add_argument("--battery", help="JSON file overriding battery settings")
    v.add_argument("--report", help="write the JSON report here")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("enumerate", help="dump the feature-expectations polytope of an MDP")
    e.add_argument("mdp")
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        # InvalidMdpError, PolytopeSizeError and battery errors are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
