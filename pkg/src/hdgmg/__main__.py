"""Command-line front end for the experiment drivers.

Subcommands: converge-diffusion, converge-stokes, mg-diffusion, mg-stokes.
Each prints the result table as CSV and optionally writes it to --out.
"""

import argparse
import sys

from .experiments import (ExperimentConfig, run_converge_diffusion,
                          run_converge_stokes, run_mg_study)


def _add_common(p, stokes=False):
    p.add_argument("--dim", type=int, default=2, choices=(2, 3))
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--smoother", default="bgs" if stokes else "pgs",
                   choices=("pjac", "pgs", "bjac", "bgs"))
    p.add_argument("--steps", type=int, default=2, metavar="M",
                   help="smoothing steps (finest-level count for --cycle varv)")
    p.add_argument("--cycle", default="varv" if stokes else "v",
                   choices=("v", "w", "varv"))
    p.add_argument("--mode", default="precond", choices=("solver", "precond"))
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=None,
                   help="coefficient ratio; selects the chessboard scenario")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--uzawa", type=int, default=1, dest="uzawa_steps")
    p.add_argument("--tol", type=float, default=1e-8, dest="rel_tol")
    p.add_argument("--coarse-h", type=float, default=None, dest="coarse_h")
    p.add_argument("--domain", default="unit_box", choices=("unit_box", "step"))
    p.add_argument("--scenario", default="constant" if stokes else "smooth",
                   choices=("smooth", "constant", "chessboard"),
                   help="coefficients: smooth manufactured fields, constants "
                        "(driven-flow benchmarks), or the alternating jump field")
    p.add_argument("--out", default=None, metavar="FILE.csv")


def _config(args, equation):
    scenario = args.scenario
    if getattr(args, "rho", None) is not None:
        scenario = "chessboard"
    return ExperimentConfig(
        equation=equation, dim=args.dim, domain=args.domain, levels=args.levels,
        scenario=scenario, smoother=args.smoother, steps=args.steps,
        cycle=args.cycle, mode=args.mode, beta=args.beta, rho=args.rho,
        eps=args.eps, uzawa_steps=args.uzawa_steps, rel_tol=args.rel_tol,
        coarse_h=args.coarse_h, out=args.out).validate()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hdgmg",
        description="Facet-based lowest-order hybrid DG solvers with geometric "
                    "multigrid: convergence and solver studies.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, stokes in [("converge-diffusion", False), ("converge-stokes", True),
                         ("mg-diffusion", False), ("mg-stokes", True)]:
        sp = subs.add_parser(name)
        _add_common(sp, stokes=stokes)
    subs.choices["converge-stokes"].set_defaults(beta=10.0, scenario="smooth")
    args = parser.parse_args(argv)

    if args.command == "converge-diffusion":
        report = run_converge_diffusion(_config(args, "diffusion"))
    elif args.command == "converge-stokes":
        report = run_converge_stokes(_config(args, "stokes"))
    elif args.command == "mg-diffusion":
        report = run_mg_study(_config(args, "diffusion"))
    else:
        report = run_mg_study(_config(args, "stokes"))
    sys.stdout.write(report.to_csv())
    return 0


if __name__ == "__main__":
    sys.exit(main())
