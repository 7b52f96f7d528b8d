"""Command-line interface: ``isodiam <command> ...`` or ``python3 -m isodiam``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

from . import constructions as co
from . import convexcheck as cc
from . import experiments as ex
from . import profiles as pr
from . import rearrange as ra

log = logging.getLogger("isodiam")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def cmd_deficit(args) -> int:
    P = pr.RadialProfile.from_json(Path(args.profile).read_text())
    if args.n is not None and args.n != P.n:
        raise pr.ProfileError(f"profile is {P.n}-dimensional, --n says {args.n}")
    rep = pr.report(P, with_r_in=not args.no_r_in)
    _emit(_dump(rep.as_dict()), args.out)
    return 0


def cmd_construct(args) -> int:
    spec = ex.parse_family(args.family)
    if spec.kind == "reuleaux":
        return _reuleaux_out(int(spec.params["k"]), float(spec.params["d"]), args.out)
    P = ex.build_profile(spec, args.eps)
    _emit(P.to_json() + "\n", args.out)
    return 0


def cmd_decay(args) -> int:
    eps = ex.geometric_grid(args.eps_max, args.eps_min, args.steps)
    fit = ex.decay_experiment(args.family, eps, seed=args.seed, threads=args.threads)
    _emit(fit.to_csv(), args.out)
    sys.stderr.write(_dump(fit.summary()))
    ok = fit.residual <= args.tol
    if not ok:
        log.warning("log-log residual %.3g exceeds --tol %.3g", fit.residual, args.tol)
    return 0 if ok else 1


def cmd_rearrange(args) -> int:
    E = ra.ball_set_from_json(Path(args.oracle).read_text(), args.n)
    R = ra.rearrange_sc(E, args.grid, args.samples, args.seed, threads=args.threads)
    P = R.profile
    doc = {
        "profile": json.loads(P.to_json()),
        "volume": pr.volume(P),
        "volume_se": R.volume_se,
        "diameter": pr.diameter(P),
        "known_volume": E.known_volume,
        "known_diameter": E.known_diameter,
        "grid_tolerance": E.r_bound / args.grid,
    }
    _emit(_dump(doc), args.out)
    return 0


def cmd_verify(args) -> int:
    sizes = json.loads(args.corpus) if args.corpus else None
    extra = [Path(p).read_text() for p in args.profile]
    report = ex.verify_suite(args.seed, sizes, extra)
    _emit(ex.report_json(report), args.out)
    for c in report["checks"]:
        sys.stderr.write(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} worst_margin={c['worst_margin']}\n")
    return 0 if report["passed"] else 1


def _reuleaux_out(k: int, d: float, out: str | None) -> int:
    R = co.reuleaux(k, d)
    poly = cc.polygon_body(R.boundary(4096))
    doc = {
        "k": k,
        "d": d,
        "perimeter": R.perimeter(),
        "perimeter_minus_pi_d": R.perimeter() - math.pi * d,
        "polygon_perimeter": cc.perimeter(poly),
        "diameter": R.diameter(),
        "vertices": R.vertices.tolist(),
    }
    _emit(_dump(doc), out)
    return 0


def cmd_reuleaux(args) -> int:
    return _reuleaux_out(args.k, args.d, args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isodiam", description=__doc__)
    ap.add_argument("--n", type=int, default=None, help="dimension (checked against the input where given)")
    ap.add_argument("--tol", type=float, default=0.05, help="tolerance for pass/fail exits")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for independent evaluations")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deficit", help="deficit functionals of a profile JSON")
    p.add_argument("profile")
    p.add_argument("--no-r-in", action="store_true", help="skip the inner-radius search")
    p.add_argument("--out")
    p.set_defaults(func=cmd_deficit)

    p = sub.add_parser("construct", help="build a named family member as profile JSON")
    p.add_argument("family", help='e.g. "n2", "high:n=4,rho=0.01", "n3:c=0.19,theta=0.7", "ballminus:r=0.3,x=0.2"')
    p.add_argument("--eps", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("decay", help="decay-rate experiment over a geometric eps grid (CSV)")
    p.add_argument("family")
    p.add_argument("--eps-min", type=float, required=True)
    p.add_argument("--eps-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("rearrange", help="spherical-cap rearrangement of a ball-union oracle JSON")
    p.add_argument("oracle")
    p.add_argument("--grid", type=int, default=ra.DEFAULT_GRID)
    p.add_argument("--samples", type=int, default=ra.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("verify", help="run the verification corpus (JSON report)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", help='JSON object overriding corpus sizes, e.g. {"random_profiles": 20}')
    p.add_argument("--profile", action="append", default=[], help="extra profile JSON to check")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reuleaux", help="regular Reuleaux polygon summary")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reuleaux)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        sys.stderr.write("error: --threads must be >= 1\n")
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
