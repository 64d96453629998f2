"""Command line interface.

Subcommands::

    analyze   --config PATH | --example ID [--n K] [--grid G] [--out PATH]
    verify    --suite NAME [--seed S]
    gallery   --list
    congruence --left ID --right ID

Exit status: 0 on success, 1 when a checked assertion fails, 2 on usage
errors (which also print the configuration schema).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, gallery
from .classifier import CONFIG_SCHEMA, AnalysisConfig, analyze
from .errors import GeometryError
from .lightcone import congruence_defect, make_rep
from .suites import SUITES, verify_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser():
    p = _Parser(prog="conformal-kaehler", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="classify an example over a sample grid")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON file mirroring the analysis config")
    src.add_argument("--example", help="gallery id, e.g. inv-catenoid-cyl-n4")
    a.add_argument("--n", type=int, help="complex dimension (appended to the id when missing)")
    a.add_argument("--grid", type=int, help="samples per chart axis (>= 2)")
    a.add_argument("--out", help="write the JSON report here instead of stdout")
    a.add_argument("--seed", type=int)
    a.add_argument("--max-points", type=int, dest="max_points")
    a.add_argument("--tol-rank", type=float, dest="rank_tol")
    a.add_argument("--tol-flat", type=float, dest="flat_tol")
    a.add_argument("--tol-var", type=float, dest="var_tol")

    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("--suite", required=True, choices=SUITES)
    v.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gallery", help="list example ids")
    g.add_argument("--list", action="store_true", required=True)

    c = sub.add_parser("congruence", help="congruence defect of two representatives")
    c.add_argument("--left", required=True)
    c.add_argument("--right", required=True)
    c.add_argument("--samples", type=int, default=40)
    c.add_argument("--seed", type=int, default=0)
    return p


def _config_from_args(args):
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    else:
        d = {"example": args.example}
    for key in ("n", "grid", "out", "seed", "max_points", "rank_tol", "flat_tol", "var_tol"):
        val = getattr(args, key)
        if val is not None:
            d[key] = val
    try:
        return AnalysisConfig.from_dict(d)
    except (GeometryError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_analyze(args, out):
    cfg = _config_from_args(args)
    try:
        report = analyze(cfg)
    except GeometryError as exc:
        if exc.code in ("GENERATION_FAILED", "BAD_CONFIG"):
            raise UsageError(str(exc)) from exc
        raise
    text = report.dumps()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    else:
        out.write(text + "\n")
    agg = report.aggregate
    failed = report.failed_assertions()
    print(
        f"{report.config['resolved_example']}: {agg['classification']} "
        f"({agg['counts']['classified']}/{agg['counts']['total']} points classified)",
        file=sys.stderr,
    )
    for name in failed:
        print(f"assertion failed: {name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args, out):
    res = verify_suite(args.suite, seed=args.seed)
    out.write(res.report() + "\n")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_gallery(args, out):
    for eid in gallery.example_ids():
        out.write(eid + "\n")
    return EXIT_OK


def cmd_congruence(args, out):
    try:
        left = gallery.build_example(args.left)
        right = gallery.build_example(args.right)
    except GeometryError as exc:
        raise UsageError(str(exc)) from exc
    if left.patch.dim != right.patch.dim or np.any(left.patch.lo != right.patch.lo) or np.any(left.patch.hi != right.patch.hi):
        raise UsageError("examples live on different charts")
    rf = make_rep(left.patch, left.kaehler)
    rg = make_rep(right.patch, right.kaehler)
    rng = np.random.default_rng(args.seed)
    X = left.patch.lo + (left.patch.hi - left.patch.lo) * rng.random((args.samples, left.patch.dim))
    x0 = 0.5 * (left.patch.lo + left.patch.hi)
    d = congruence_defect(rf, rg, x0, X)
    verdict = "congruent" if d <= 1e-6 else "not congruent"
    out.write(json.dumps({"left": args.left, "right": args.right, "defect": d, "verdict": verdict}) + "\n")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "gallery": cmd_gallery, "congruence": cmd_congruence}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        print("config schema:", file=sys.stderr)
        print(json.dumps(CONFIG_SCHEMA, indent=1), file=sys.stderr)
        return EXIT_USAGE
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
