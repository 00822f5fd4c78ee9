"""Command line entry point: ``wgmaxwell solve`` and ``wgmaxwell study``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .eigensolver import SolverError
from .mesh import MeshError
from .study import ConfigError, GammaSpec, RunConfig, export_field, run_study, summary

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 2, 3


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers: {text!r}")


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers: {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", type=_floats, default=(0.0, 0.0, math.pi, math.pi),
                        help="x0,y0,x1,y1 (default 0,0,pi,pi)")
    common.add_argument("--n", type=_ints, default=None, help="comma separated grid sizes")
    common.add_argument("--cells", choices=["square", "tri"], default="square")
    common.add_argument("--k", type=int, default=1)
    common.add_argument("--gamma", default="pow:0.1", help="pow:EPS or invlog")
    common.add_argument("--eps-r", type=float, default=1.0)
    common.add_argument("--mu-r", type=float, default=1.0)
    common.add_argument("--num-eigs", type=int, default=5)
    common.add_argument("--exact", type=_floats, default=None,
                        help="exact eigenvalues, comma separated")
    common.add_argument("--shift", type=float, default=0.3)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="study CSV path")
    common.add_argument("--field-out", default=None, help="field CSV path (finest level)")
    common.add_argument("--mode", type=int, default=1, help="1-based mode index to export")
    common.add_argument("--grid", type=int, default=50, help="field sampling grid size")
    common.add_argument("--method", choices=["auto", "dense", "iterative"], default="auto")
    common.add_argument("--p-stab-weight", type=float, default=1.0,
                        help="weight of the multiplier stabilizer in the eigen pencil")
    common.add_argument("--no-timing", action="store_true",
                        help="leave the seconds column empty (byte-reproducible CSV)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="wgmaxwell",
                description="Weak Galerkin lower-bound eigenvalues for the 2D Maxwell cavity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="solve a single level")
    sub.add_parser("study", parents=[common], help="refinement study over --n levels")
    return p


def config_from_args(args) -> RunConfig:
    n_list = args.n or ((16,) if args.command == "solve" else (8, 16, 32, 64))
    if args.command == "solve":
        n_list = n_list[:1]
    if len(args.domain) != 4:
        raise ConfigError("--domain needs four numbers x0,y0,x1,y1")
    return RunConfig(
        domain=args.domain, n_list=n_list, cells=args.cells, k=args.k,
        gamma=GammaSpec.parse(args.gamma), eps_r=args.eps_r, mu_r=args.mu_r,
        num_eigs=args.num_eigs, exact=args.exact, shift=args.shift, seed=args.seed,
        out=args.out, timing=not args.no_timing, method=args.method,
        p_stab_weight=args.p_stab_weight,
    )


def _print_level(rec):
    cols = [f"n={rec.n:<4d}"]
    for j, lam in enumerate(rec.eigenvalues):
        s = f"lam{j + 1}={lam:.8f}"
        if rec.errors is not None:
            s += f" err={rec.errors[j]:.4e}"
        cols.append(s)
    print("  ".join(cols) + f"  ({rec.seconds:.1f}s)", flush=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        if args.mode < 1 or args.mode > config.num_eigs:
            raise ConfigError(f"--mode must lie in 1..{config.num_eigs}")
    except (ConfigError, MeshError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        records = run_study(config, progress=_print_level)
    except (SolverError, RuntimeError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if len(records) > 1 or config.exact is not None:
        print(summary(records))
    if args.field_out:
        rec = records[-1]
        j = args.mode - 1
        if j >= len(rec.eigenvalues):
            print(f"solver failure: mode {args.mode} not available", file=sys.stderr)
            return EXIT_SOLVER
        _, skipped = export_field(rec.result.eigenvectors[:, j], rec.mesh, config.k,
                                  args.grid, config.domain, args.field_out)
        if skipped:
            print(f"field export: {skipped} sample(s) outside the mesh skipped", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
