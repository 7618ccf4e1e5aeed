"""Command-line entry point: ``gso``, ``sweep`` and ``validate`` subcommands.

Exit codes: 0 on success, 1 when an optimizer run aborts (or a validation
check fails), 2 for configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, DimensionMismatch, NotInvariant, NotRealHamiltonian, RunAborted
from ..optimize import OPTIMIZERS
from .config import MODELS, InitSpec, RunConfig, default_seed
from .runner import run_gso
from .sweep import AXES, sweep
from .validate import SUITES, validate

EXIT_OK, EXIT_ABORT, EXIT_INPUT = 0, 1, 2


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS, default="xxz")
    p.add_argument("--n", type=int, default=4, help="number of qubits")
    p.add_argument("--delta", type=float, default=0.5, help="XXZ anisotropy")
    p.add_argument("--field", type=float, default=0.033, help="TFIM transverse field")
    p.add_argument("--k", type=int, default=None, help="TFIM maximum Hamming weight (default 3)")
    p.add_argument("--hamiltonian", default=None, help="Pauli-sum JSON file for --model pauli-file")
    p.add_argument("--optimizer", choices=OPTIMIZERS, default="egt-cg")
    p.add_argument("--init", default="haar", help="warm:<alpha> | haar:<seed> | file:<path>")
    p.add_argument("--chem-acc", type=float, default=1.6e-3)
    p.add_argument("--chem-mode", choices=("abs", "rel"), default="abs")
    p.add_argument("--seeds", type=int, default=1, help="number of Haar starts (sweeps)")
    p.add_argument("--seed", type=int, default=None, help="base seed (default: $GSO_SEED or 7)")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--golden-section", action="store_true", help="golden-section start for the line search")
    p.add_argument("--epochs-max", type=int, default=1000)
    p.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                   help="override an optimizer setting, e.g. --set c3=1.5")


def _parse_override(text: str):
    name, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"--set expects NAME=VALUE, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return name.strip(), value


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = dict(_parse_override(s) for s in args.set)
    return RunConfig(
        model=args.model, n=args.n, delta=args.delta, field=args.field, k=args.k,
        hamiltonian=args.hamiltonian, optimizer=args.optimizer, init=InitSpec.parse(args.init),
        chem_acc=args.chem_acc, chem_mode=args.chem_mode, seeds=args.seeds,
        seed=default_seed() if args.seed is None else args.seed, out=args.out, threads=args.threads,
        golden_section=args.golden_section, epochs_max=args.epochs_max, overrides=overrides,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egt", description="Exact-geodesic ground-state optimization bench")
    sub = parser.add_subparsers(dest="command", required=True)
    gso = sub.add_parser("gso", help="single ground-state optimization run")
    _add_run_flags(gso)
    sw = sub.add_parser("sweep", help="grid of runs over sizes, seeds or optimizers")
    _add_run_flags(sw)
    sw.add_argument("--axis", choices=AXES, default="seeds")
    sw.add_argument("--values", default=None,
                    help="comma-separated axis values (default: the --seeds seeds)")
    val = sub.add_parser("validate", help="fixed-seed invariant suites")
    val.add_argument("suite", choices=SUITES + ("all",), nargs="?", default="all")
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out", default=None, help="write the JSON verdict here")
    return parser


def _axis_values(axis: str, raw: str | None, cfg: RunConfig):
    if raw is None:
        if axis == "seeds":
            return cfg.seed_list()
        raise ConfigError(f"--values is required for axis {axis}")
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError("--values is empty")
    if axis in ("sizes", "seeds"):
        try:
            return [int(s) for s in items]
        except ValueError as exc:
            raise ConfigError(f"--values for {axis} must be integers") from exc
    bad = [s for s in items if s not in OPTIMIZERS]
    if bad:
        raise ConfigError(f"unknown optimizer(s): {', '.join(bad)}")
    return items


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            verdict = validate(args.suite, args.seed)
            text = json.dumps(verdict, indent=2)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(text + "\n")
            print(text)
            return EXIT_OK if verdict["passed"] else EXIT_ABORT
        cfg = config_from_args(args)
        if args.command == "gso":
            _, summary = run_gso(cfg)
            print(json.dumps(summary, indent=2, sort_keys=True))
            return EXIT_OK
        values = _axis_values(args.axis, args.values, cfg)
        report = sweep(cfg, args.axis, values)
        print(json.dumps(report["cells"], indent=2, sort_keys=True, default=str))
        return EXIT_OK
    except RunAborted as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, NotRealHamiltonian, NotInvariant, DimensionMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
