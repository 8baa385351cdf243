"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 optimiser stall,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, IntegrationError, InvalidInputError, InvalidValueError, SingularFamilyError
from . import experiments as ex
from .datasets import SpiralParams, generate_spirals, write_landmarks

log = logging.getLogger("srlm")


def _cmd_match(args):
    result = ex.run_match(args.config, args.out)
    r = result.report
    print(f"status {r.status} after {r.iterations} iterations; energy {r.final_energy:.6g}; residual {r.residual:.3e}")
    if result.accuracy is not None:
        print(f"accuracy {result.accuracy:.4f}")
    print(f"wrote {len(result.files)} files to {args.out}")
    return result.exit_code


def _parse_sigmas(text):
    if not text.strip():
        return []
    try:
        return [float(s) for s in text.split(",")]
    except ValueError:
        raise ConfigError(f"--sigmas: not a comma-separated list of numbers: {text!r}") from None


def _cmd_sweep(args):
    rows = ex.run_sigma_sweep(args.config, _parse_sigmas(args.sigmas), args.out)
    print("sigma,acc_train,acc_new,status")
    for row in rows:
        print(row.csv())
    return ex.EXIT_OK


def _cmd_warp(args):
    grid = ex.warp_grid(args.solution, args.resolution, args.out)
    print(f"warped {grid.node_count} grid nodes; wrote grid.csv and grid.svg to {args.out}")
    return ex.EXIT_OK


def _cmd_spiral(args):
    params = SpiralParams(per_arm=args.per_arm, noise=args.noise)
    ds = generate_spirals(params, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_landmarks(out, ds.points, ds.labels)
    if ds.exceeds_injectivity_radius:
        print("warning: spiral radius exceeds pi; arms wrap around the torus", file=sys.stderr)
    print(f"wrote {len(ds.points)} points to {out}")
    return ex.EXIT_OK


def _cmd_verify(args):
    diag = ex.verify_dynamics(args.family, args.samples, args.seed)
    sys.stdout.write(diag.format())
    return ex.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srlm", description="Sub-Riemannian landmark matching on the flat torus.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="optimise one configured matching problem")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("sweep-sigma", help="classification accuracy over regularisation strengths")
    p.add_argument("--config", required=True)
    p.add_argument("--sigmas", required=True, help="comma-separated sigma values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("warp-grid", help="advect a regular grid through a stored solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--resolution", type=int, default=24)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_warp)

    p = sub.add_parser("gen-spiral", help="write a two-arm spiral dataset as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--per-arm", type=int, default=SpiralParams.per_arm)
    p.add_argument("--noise", type=float, default=SpiralParams.noise)
    p.set_defaults(func=_cmd_spiral)

    p = sub.add_parser("verify-dynamics", help="compare quadrature and closed-form control ODEs")
    p.add_argument("--family", required=True, choices=["constant", "linear", "trig"])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ex.EXIT_CONFIG
    except (IntegrationError, InvalidValueError, SingularFamilyError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return ex.EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
