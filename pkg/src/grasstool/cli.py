"""Command-line front end: ``grasstool <subcommand> [options]``.

Every artifact carries a ``meta`` block with the full configuration, the
seed, the tool version and the tolerance set. JSON is written with sorted
keys and no timings, so identical configurations give identical bytes.

Exit codes: 0 on success, 1 when an acceptance check fails, 2 on bad
configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, chern, grassmann, retraction, states, suite
from .errors import GrassError
from .operators import Tolerances, op_norm, operator_from_dict, random_projection

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _meta(args: argparse.Namespace, tol: Tolerances) -> dict[str, Any]:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output")}
    return {"config": config, "seed": args.seed, "version": __version__, "tolerances": tol.as_dict()}


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _need_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise ConfigError(f"`{args.subcommand}` draws random data and needs --seed")
    return args.seed


def _tolerances(args: argparse.Namespace) -> Tolerances:
    try:
        return Tolerances(args.tol_algebraic, args.tol_spectral, args.rank_gap)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _load_point(path: str, tol: Tolerances) -> grassmann.GrassmannPoint:
    return grassmann.point_from_dict(_load_json(path), tol)


# subcommands


def cmd_section(args, tol) -> int:
    seed = _need_seed(args)
    if not 0 < args.rank < args.dim:
        raise ConfigError("need 0 < rank < dim")
    samples, N = suite.section_samples(args.dim, seed, k=args.rank, count=args.samples)
    sec, bounds = suite.check_section(samples, N), suite.check_bounds(samples, N)
    out = {
        "meta": _meta(args, tol),
        "section": {"passed": sec.passed, **sec.details},
        "bound_chain": {"passed": bounds.passed, **bounds.details},
    }
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_connect(args, tol) -> int:
    if args.P is not None or args.Q is not None:
        if args.P is None or args.Q is None:
            raise ConfigError("--P and --Q must be given together")
        P, Q = _load_point(args.P, tol), _load_point(args.Q, tol)
    else:
        seed = _need_seed(args)
        if not 0 <= args.rank <= args.dim:
            raise ConfigError("need 0 <= rank <= dim")
        P = grassmann.certify(random_projection(args.dim, args.rank, seed), tol)
        Q = grassmann.certify(random_projection(args.dim, args.rank, seed + 1), tol)
    path = grassmann.connect(P, Q, args.steps)
    gaps = [op_norm(a.op - b.op) for a, b in zip(path, path[1:])]
    out = {
        "meta": _meta(args, tol),
        "principal_angles": grassmann.principal_angles(P, Q).tolist(),
        "step_gaps": gaps,
        "path": [grassmann.point_to_dict(p) for p in path],
    }
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_retract(args, tol) -> int:
    if args.input is not None:
        P = _load_point(args.input, tol)
        level = int(round(math.log2(P.dim)))
        if 2**level != P.dim:
            raise ConfigError(f"projection dim {P.dim} is not a power of two")
        if args.level is not None and args.level != level:
            raise ConfigError(f"--level {args.level} does not match input dim {P.dim}")
    else:
        seed = _need_seed(args)
        level = 8 if args.level is None else args.level
        if not 0 <= level <= 12:
            raise ConfigError("--level must lie in 0..12")
        if not 0 <= args.rank <= 2**level:
            raise ConfigError("need 0 <= rank <= 2**level")
        P = grassmann.certify(random_projection(2**level, args.rank, seed), tol)
    rows = retraction.weak_limit_scan(retraction.DyadicGrid(level), P)
    buf = io.StringIO()
    buf.write("# " + json.dumps(_meta(args, tol), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "weak_dist", "trace", "rank"])
    for r in rows:
        writer.writerow([repr(r.t), repr(r.weak_dist), repr(r.trace), r.rank])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _builtin_family(args, tol) -> chern.ProjectionFamily:
    if args.family == "qwz":
        mesh = chern.torus(args.resolution)
        return chern.qwz_family(mesh, args.mass, args.dim, tol)
    mesh = chern.cubed_sphere(args.resolution)
    if args.family == "monopole":
        return chern.monopole_family(mesh, args.dim, tol)
    P0 = np.zeros((args.dim, args.dim), dtype=complex)
    P0[0, 0] = 1.0
    return chern.constant_family(mesh, P0, tol)


def cmd_chern(args, tol) -> int:
    if args.resolution < 1:
        raise ConfigError("--resolution must be positive")
    if args.dim < 2:
        raise ConfigError("--dim must be at least 2")
    if args.input is not None:
        F = chern.family_from_dict(_load_json(args.input), tol)
    else:
        F = _builtin_family(args, tol)
    out = {"meta": _meta(args, tol), **chern.chern_report(F).as_dict()}
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_states(args, tol) -> int:
    files = (args.P, args.Q, args.A)
    if any(f is not None for f in files):
        if any(f is None for f in files):
            raise ConfigError("--P, --Q and --A must be given together")
        P, Q = _load_point(args.P, tol), _load_point(args.Q, tol)
        A = operator_from_dict(_load_json(args.A))
    else:
        seed = _need_seed(args)
        if not 0 < args.rank < args.dim:
            raise ConfigError("need 0 < rank < dim")
        if not 0 <= args.gap <= 1:
            raise ConfigError("--gap must lie in [0, 1]")
        rng = np.random.default_rng(seed)
        P = grassmann.certify(random_projection(args.dim, args.rank, rng), tol)
        Q = states.rotate_toward(P, args.gap, seed + 1)
        A = rng.standard_normal((args.dim, args.dim)) + 1j * rng.standard_normal((args.dim, args.dim))
    cert = states.continuity_certificate(P, Q, A)
    out = {"meta": _meta(args, tol), **cert.as_dict()}
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_separation(args, tol) -> int:
    seed = _need_seed(args)
    if args.dim < 1:
        raise ConfigError("--dim must be positive")
    rng = np.random.default_rng(seed)
    table = []
    for _ in range(args.pairs):
        n = int(rng.integers(0, args.dim))
        m = int(rng.integers(n + 1, args.dim + 1))
        P = grassmann.certify(random_projection(args.dim, n, rng), tol)
        Q = grassmann.certify(random_projection(args.dim, m, rng), tol)
        table.append([n, m, grassmann.rank_separation(P, Q)])
    out = {
        "meta": _meta(args, tol),
        "min_separation": min((row[2] for row in table), default=None),
        "table": table,
        "weak_decay": suite.weak_decay(args.dim),
    }
    _emit(_dumps(out), args.output)
    return EXIT_OK


def cmd_suite(args, tol) -> int:
    seed = _need_seed(args)
    if args.dim < 4:
        raise ConfigError("--dim must be at least 4")
    results = suite.run_suite(args.dim, seed)
    report = {
        "meta": _meta(args, tol),
        "passed": all(r.passed for r in results),
        "checks": {r.name: {"passed": r.passed, **r.details} for r in results},
    }
    text = _dumps(report)
    if args.output is None:
        sys.stdout.write(text)
    else:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite.json").write_text(text)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.2f} s)", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every random draw (required when random data is used)")
    common.add_argument("--output", default=None, help="output file (directory for `suite`); stdout if omitted")
    common.add_argument("--tol-algebraic", type=float, default=1e-10)
    common.add_argument("--tol-spectral", type=float, default=1e-8)
    common.add_argument("--rank-gap", type=float, default=0.5)

    parser = argparse.ArgumentParser(prog="grasstool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"grasstool {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("section", parents=[common], help="sample O_0 and check the polar section")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=cmd_section)

    p = sub.add_parser("connect", parents=[common], help="geodesic path between equal-rank projections")
    p.add_argument("--dim", type=int, default=12)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--P", default=None, help="start projection (JSON)")
    p.add_argument("--Q", default=None, help="end projection (JSON)")
    p.set_defaults(func=cmd_connect)

    p = sub.add_parser("retract", parents=[common], help="weak-limit scan of the retraction (CSV)")
    p.add_argument("--level", type=int, default=None, help="grid level J, m = 2**J cells (default 8)")
    p.add_argument("--rank", type=int, default=3)
    p.add_argument("--input", default=None, help="projection JSON on a dyadic grid")
    p.set_defaults(func=cmd_retract)

    p = sub.add_parser("chern", parents=[common], help="first Chern number of a projection family")
    p.add_argument("--family", choices=("monopole", "constant", "qwz"), default="monopole")
    p.add_argument("--resolution", type=int, default=12)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--mass", type=float, default=1.0, help="mass parameter of the qwz family")
    p.add_argument("--input", default=None, help="family JSON (overrides --family)")
    p.set_defaults(func=cmd_chern)

    p = sub.add_parser("states", parents=[common], help="trace-state continuity certificate")
    p.add_argument("--P", default=None)
    p.add_argument("--Q", default=None)
    p.add_argument("--A", default=None)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--gap", type=float, default=0.01, help="op-norm distance of the random Q from P")
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("separation", parents=[common], help="rank-separation table")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--pairs", type=int, default=500)
    p.set_defaults(func=cmd_separation)

    p = sub.add_parser("suite", parents=[common], help="run the full acceptance battery")
    p.add_argument("--dim", type=int, default=16)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        tol = _tolerances(args)
        return args.func(args, tol)
    except (ConfigError, GrassError, ValueError) as exc:
        print(f"grasstool {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
