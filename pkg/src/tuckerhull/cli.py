"""Command-line entry point: ``tuckerhull <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io
from .errors import TuckerHullError
from .experiments import (ExperimentConfig, approx_curve, load_samples, make_config,
                          read_config_file, timing_curve)
from .hull import build_hull, hull_membership_distance, project_onto_hull
from .simgen import generate_family
from .subspace import als_fit, hosvd_init, project_coeffs

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("tuckerhull")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _settings(args, extra=()) -> dict:
    """Config-file values overridden by whichever flags were given."""
    settings = read_config_file(args.config) if args.config else {}
    for key in ("seed", "dims", "sizes", "methods", "reps", *extra):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _config(args, extra=()) -> ExperimentConfig:
    return make_config(_settings(args, extra))


def _write_or_print(records, out):
    if out:
        io.write_csv(out, records)
    else:
        print("method,n,dimension,value")
        for r in records:
            print(f"{r.method},{r.n},{r.dimension},{r.value!r}")


def cmd_generate(args):
    cfg = _config(args, extra=("grid", "K", "L"))
    if not args.out:
        raise UsageError("generate needs --out")
    family = generate_family(cfg.family)
    io.write_family(args.out, family, mode=args.mode)
    log.info("wrote %d operators of size %dx%d to %s", len(family), *family[0].shape, args.out)


def cmd_fit(args):
    if not args.out:
        raise UsageError("fit needs --out")
    ranks = [int(x) for x in args.dims.replace(",", " ").split()] if args.dims else [10]
    if len(ranks) == 1:
        ranks *= 2
    if len(ranks) != 2:
        raise UsageError("--dims for fit takes one or two ranks: I[,J]")
    family = io.read_family(args.family, mode=args.mode)
    model = hosvd_init(family, *ranks, strict=not args.allow_deficient)
    if args.method == "als":
        model = als_fit(family, *ranks, init=model, max_iters=args.max_iters,
                        rel_tol=args.rel_tol, strict=not args.allow_deficient)
    io.write_model(args.out, model, mode=args.mode)
    if args.hull_out:
        io.write_hull(args.hull_out, build_hull(family, model), mode=args.mode)
    log.info("fit %s model I=%d J=%d, residual %.6g", args.method, *ranks, model.fit)


def cmd_project(args):
    model = io.read_model(args.model, mode=args.mode)
    hull = io.read_hull(args.hull, model=model, mode=args.mode)
    if args.index is not None:
        family = io.read_family(args.operator, mode=args.mode)
        if not 0 <= args.index < len(family):
            raise UsageError(f"--index {args.index} out of range for {len(family)} operators")
        target = family[args.index]
    else:
        target = io.read_operator(args.operator, mode=args.mode)
    proj = project_onto_hull(target, hull, k_end=args.k_end, rel_tol=args.rel_tol)
    dist = hull_membership_distance(target, hull, k_end=args.k_end, rel_tol=args.rel_tol)
    result = {
        "weights": proj.weights.lam.tolist(),
        "coefficients": proj.coeffs.gamma.tolist(),
        "target_coefficients": project_coeffs(target, model).gamma.tolist(),
        "objective": proj.objective,
        "iterations": proj.iterations,
        "degenerate": proj.degenerate,
        "reduced_distance": dist.reduced,
        "orthogonal_residual": dist.orthogonal,
        "total_distance": dist.total,
    }
    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_approx_curve(args):
    cfg = _config(args, extra=("family_path",))
    samples = load_samples(cfg)
    records = approx_curve(samples, cfg.dims, cfg.methods, cfg.max_iters, cfg.rel_tol,
                           cfg.size_cap)
    _write_or_print(records, args.out or cfg.out)


def cmd_timing_curve(args):
    cfg = _config(args, extra=("timing_rank",))
    records = timing_curve(cfg.sizes, cfg.methods, cfg.reps, cfg.timing_rank, cfg.family,
                           cfg.max_iters, cfg.rel_tol, cfg.size_cap)
    _write_or_print(records, args.out or cfg.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--seed", type=int, help="RNG seed of the simulated family")
    common.add_argument("--out", help="output path")
    common.add_argument("--mode", choices=("binary", "text"),
                        help="file encoding (default: text for *.txt, binary otherwise)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="tuckerhull", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a simulated family")
    p.add_argument("--grid", help="side length, or rows,cols")
    p.add_argument("--K", type=int, help="pairs per operator")
    p.add_argument("--L", type=int, help="number of operators")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", parents=[common], help="estimate a subspace (and hull)")
    p.add_argument("--family", required=True, help="OPFAM1 input file")
    p.add_argument("--dims", help="ranks I[,J] (default 10)")
    p.add_argument("--method", choices=("hosvd", "als"), default="als")
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--rel-tol", type=float, default=1e-8)
    p.add_argument("--allow-deficient", action="store_true",
                   help="complete rank-deficient bases instead of failing")
    p.add_argument("--hull-out", help="also write the HUL1 hull model here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("project", parents=[common], help="project an operator onto a hull")
    p.add_argument("--model", required=True, help="SSM1 subspace model")
    p.add_argument("--hull", required=True, help="HUL1 hull model")
    p.add_argument("--operator", required=True, help="OPF1 file, or OPFAM1 with --index")
    p.add_argument("--index", type=int, help="operator index inside a family file")
    p.add_argument("--k-end", type=int, default=500)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("approx-curve", parents=[common], help="relative error sweep (CSV)")
    p.add_argument("--family", dest="family_path", help="OPFAM1 input instead of simulation")
    p.add_argument("--dims", help="dimensions, e.g. 0:30 or 1,2,4")
    p.add_argument("--methods", help="subset of DCT,SVD,HOSVD,ALS")
    p.set_defaults(func=cmd_approx_curve)

    p = sub.add_parser("timing-curve", parents=[common], help="wall-time sweep (CSV)")
    p.add_argument("--sizes", help="operator sizes n, e.g. 128,256,512")
    p.add_argument("--methods", help="subset of DCT,SVD,HOSVD,ALS")
    p.add_argument("--reps", type=int, help="timed repetitions per point")
    p.add_argument("--rank", dest="timing_rank", type=int, help="basis size |I| = |J|")
    p.set_defaults(func=cmd_timing_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"tuckerhull {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TuckerHullError, OSError, ValueError) as exc:
        print(f"tuckerhull {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
