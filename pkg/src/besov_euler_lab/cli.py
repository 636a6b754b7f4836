"""Command line entry point: ``besov-euler-lab {check|construct|norm|solve|experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from .bundle import BundleError, read_bundle, write_bundle
from .constructions import FAMILIES, CarrierError, DataFamilySpec, build_family
from .experiments import EXPERIMENTS, ExperimentReport, run_check_suite, run_experiment
from .grid import BesovParams, PRESETS, create_grid, get_preset
from .littlewood_paley import besov_norm, homogeneous_besov_norm
from .report import ConfigError, ReportError, load_config, write_report
from .solver import SolverBlowup, SolverConfig, solve

logger = logging.getLogger("besov_euler_lab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _real(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def _times(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated times, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="besov-euler-lab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file overriding defaults")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--omega", type=float)
        p.add_argument("--out", help="report directory")

    p = sub.add_parser("check", help="run the residual and solver check suite")
    add_config(p)

    p = sub.add_parser("experiment", help="run one experiment and write its report")
    p.add_argument("name", choices=EXPERIMENTS)
    add_config(p)

    p = sub.add_parser("construct", help="build an initial-data family and write a field bundle")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--s", type=float, default=3.0)
    p.add_argument("--preset", choices=sorted(PRESETS), default="ci")
    p.add_argument("--out", required=True)

    p = sub.add_parser("norm", help="print the Besov block profile of a bundle as CSV")
    p.add_argument("bundle")
    p.add_argument("--s", type=float, default=3.0)
    p.add_argument("--p", type=_real, default=2.0)
    p.add_argument("--r", type=_real, default=2.0)
    p.add_argument("--homogeneous", action="store_true")

    p = sub.add_parser("solve", help="integrate a bundle and store snapshots")
    p.add_argument("--init", required=True)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--T", type=float, required=True)
    step = p.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float)
    step.add_argument("--auto-dt", action="store_true", help="CFL step (the default)")
    p.add_argument("--snapshots", type=_times, default=())
    p.add_argument("--no-advection", action="store_true")
    p.add_argument("--out", required=True)
    return parser


def _print_report(report: ExperimentReport) -> None:
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"{status} {report.experiment}.{v.name} measured={v.measured:.6g} threshold {v.threshold}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"{report.experiment}: {'PASS' if report.passed else 'FAIL'}")


def _run_report(args, runner) -> int:
    cfg = load_config(args.config, preset=args.preset, omega=args.omega, output_dir=args.out)
    report = runner(cfg)
    if cfg.output_dir:
        write_report(report, cfg.output_dir)
    _print_report(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_check(args) -> int:
    return _run_report(args, run_check_suite)


def _cmd_experiment(args) -> int:
    return _run_report(args, lambda cfg: run_experiment(args.name, cfg))


def _cmd_construct(args) -> int:
    grid = create_grid(get_preset(args.preset).spec)
    f = build_family(grid, DataFamilySpec(args.family, args.s, args.n, args.n_max))
    write_bundle(f, args.out)
    print(f"wrote {args.out}: {f.provenance}")
    return EXIT_OK


def _cmd_norm(args) -> int:
    f = read_bundle(args.bundle)
    params = BesovParams(args.s, args.p, args.r)
    norm = homogeneous_besov_norm(f, params) if args.homogeneous else besov_norm(f, params)
    sys.stdout.write(norm.as_csv())
    print(f"norm,{norm.value!r}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    u0 = read_bundle(args.init)
    cfg = SolverConfig(
        omega=args.omega,
        T=args.T,
        dt=args.dt,
        snapshot_times=args.snapshots,
        advection=not args.no_advection,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = []

    def store(t: float, u) -> None:
        name = f"snapshot_{len(names):03d}"
        write_bundle(u, out / name)
        names.append(name)

    traj = solve(u0, cfg, observer=store, store=False)
    meta = traj.as_dict()
    meta.update({"omega": cfg.omega, "T": cfg.T, "bundles": names})
    (out / "trajectory.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(names)} snapshots to {out} (dt={traj.dt:.6g}, steps={traj.steps})")
    return EXIT_OK


COMMANDS = {
    "check": _cmd_check,
    "experiment": _cmd_experiment,
    "construct": _cmd_construct,
    "norm": _cmd_norm,
    "solve": _cmd_solve,
}


def cli_main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, BundleError, CarrierError, ReportError, SolverBlowup) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ConfigError) else EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
