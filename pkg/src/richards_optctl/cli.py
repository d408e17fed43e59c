"""Command-line entry point: list, validate, run and gradient-check scenarios."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .exceptions import (
    InvalidBoundary, LineSearchStall, PicardDivergence, SchemaError, UnknownScenario,
    ValidationError, DomainError,
)
from .optim import gradient_check
from .output import run
from .scenario import BUILTINS, builtin_scenario, load_scenario, parse_scenario

__all__ = ["main"]

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2
THREADS_ENV = "RICHARDS_OPTCTL_THREADS"

_INVALID = (SchemaError, ValidationError, UnknownScenario)
_SOLVER = (PicardDivergence, LineSearchStall, InvalidBoundary, DomainError)


def _add_overrides(p):
    p.add_argument("--maxit", type=int, help="PGD iteration cap")
    p.add_argument("--tol", type=float, help="PGD cost-change tolerance")
    p.add_argument("--eps", type=float, help="diffusivity truncation margin")
    p.add_argument("--lambda", dest="lam", type=float, help="control penalty weight")
    p.add_argument("--nz", type=int, help="number of depth nodes")
    p.add_argument("--nt", type=int, help="number of time levels")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="richards-optctl",
        description="Optimal irrigation by adjoint-based control of the Richards equation",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log PGD progress")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list built-in scenarios")

    p = sub.add_parser("validate", help="check a scenario config file")
    p.add_argument("file")

    p = sub.add_parser("run", help="optimise one or more scenarios and write CSV outputs")
    p.add_argument("targets", nargs="+", metavar="name-or-file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--wide", action="store_true", help="write fields as z-by-t matrices")
    _add_overrides(p)

    p = sub.add_parser("gradient-check", help="compare adjoint and finite-difference gradients")
    p.add_argument("target", metavar="name-or-file")
    p.add_argument("--directions", type=int, default=5)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    _add_overrides(p)
    return parser


def _load(target, args):
    sc = load_scenario(target)
    sc = sc.with_overrides(maxit=args.maxit, tol=args.tol, epsilon=args.eps, lam=args.lam,
                           Nz=args.nz, Nt=args.nt)
    return sc.validate()


def _threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _cmd_run(args):
    scenarios = [_load(t, args) for t in args.targets]
    many = len(scenarios) > 1

    def job(sc):
        out = os.path.join(args.out, sc.name) if many else args.out
        bundle = run(sc, out, wide=args.wide)
        meta = bundle.metadata
        return (f"{sc.name}: {meta['exit_reason']} after {meta['iterations']} iterations, "
                f"J={meta['cost_history'][-1]:.10g} -> {out}")

    with ThreadPoolExecutor(max_workers=min(_threads(), len(scenarios))) as pool:
        for line in pool.map(job, scenarios):
            print(line)
    return EXIT_OK


def _cmd_gradient_check(args):
    sc = _load(args.target, args)
    worst = 0.0
    for k, (adj, fd, rel) in enumerate(
            gradient_check(sc, directions=args.directions, h=args.step, seed=args.seed)):
        print(f"direction {k}: adjoint={adj:.10e} fd={fd:.10e} rel_err={rel:.3e}")
        worst = max(worst, rel)
    print(f"max relative error: {worst:.3e}")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list":
            for name in BUILTINS:
                sc = builtin_scenario(name)
                print(f"{name}\t{sc.soil.family}\tZ={sc.grid.Z:g} cm\tT={sc.grid.T:g} h")
            return EXIT_OK
        if args.command == "validate":
            with open(args.file) as fh:
                sc = parse_scenario(fh.read())
            print(f"{args.file}: ok ({sc.name})")
            return EXIT_OK
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_gradient_check(args)
    except ValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except (*_INVALID, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _SOLVER as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
