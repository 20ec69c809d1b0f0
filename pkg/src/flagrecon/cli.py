"""Command-line front end.

Usage:
    flagrecon synth sphere --radius 1 --flag sphere.json
    flagrecon synth harmonic --lmax 4 --seed 7 --margin 0.1 --density h.json --flag F.json
    flagrecon validate F.json --samples 200 --tol 5e-3
    flagrecon reconstruct F.json out/ --lmax 8 --n-lat 32 --n-lon 64 --subdiv 3
    flagrecon forward h.json F.json
    flagrecon roundtrip h.json

Exit codes: 0 success, 1 validation failure, 2 not a body, 3 input format error.
Every JSON report carries the resolution, seed and frame convention.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .errors import FormatError, NotABody
from .flag_field import mean_over_psi, validate_symmetry
from .oracle import make_harmonic, make_sphere
from .reconstruct import convexity_audit, export_mesh
from .sphere import FRAME_CONVENTION
from .transforms import (GeneratingDensity, blaschke_density, consistency_residual,
                         forward_field)

EXIT_OK, EXIT_INVALID, EXIT_NOT_BODY, EXIT_FORMAT = 0, 1, 2, 3

log = logging.getLogger("flagrecon")


def _emit(report: dict, path: str | None):
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        io.write_atomic(path, text + "\n")
    print(text)


def _density_summary(h: GeneratingDensity) -> dict:
    return {"lindquist_margin": h.lindquist_margin, "tol_pos": h.tol_pos,
            "body_valid": bool(h.is_body)}


def cmd_synth(args) -> int:
    if args.density is None and args.flag is None:
        raise FormatError("synth needs --density and/or --flag")
    if args.kind == "sphere":
        h, F, _ = make_sphere(args.radius, args.n_lat, args.n_lon)
    else:
        h = make_harmonic(args.lmax, args.seed, args.margin, args.n_lat, args.n_lon)
        F = forward_field(h)
    meta = {"synthetic": h.meta, **_density_summary(h), "n_lat": args.n_lat, "n_lon": args.n_lon}
    if args.density:
        io.write_scalar(args.density, h.field, **meta)
    if args.flag:
        io.write_flag(args.flag, F, **{k: v for k, v in meta.items()
                                       if k not in ("n_lat", "n_lon")})
    print(json.dumps({**meta, "frame_convention": FRAME_CONVENTION,
                      "density": args.density, "flag": args.flag}, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    F, _ = io.read_flag(args.flag_file, allow_extra=True)
    rep = consistency_residual(F, sample_count=args.samples, seed=args.seed, lmax=args.lmax)
    sym = validate_symmetry(F, samples=args.samples, seed=args.seed)
    report = rep.to_json()
    report.update({"tol": args.tol, "symmetry_deviation": sym.max_deviation,
                   "symmetry_tol": sym.tol, "symmetry_passed": sym.passed})
    ok = rep.max_residual < args.tol and sym.passed
    report["passed"] = ok
    _emit(report, args.report)
    return EXIT_OK if ok else EXIT_INVALID


def _reconstruct(F, lmax: int, n_lat: int, n_lon: int) -> GeneratingDensity:
    lmax = min(lmax, F.grid.max_lmax() - F.grid.max_lmax() % 2)
    return blaschke_density(mean_over_psi(F, lmax), n_lat, n_lon, lmax)


def cmd_reconstruct(args) -> int:
    F, _ = io.read_flag(args.flag_file, allow_extra=args.allow_extra_harmonics)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    h = _reconstruct(F, args.lmax, args.n_lat, args.n_lon)
    summary = _density_summary(h)
    io.write_scalar(out / "density.json", h.field, **summary)
    report = {"n_lat": args.n_lat, "n_lon": args.n_lon, "lmax": h.field.lmax,
              "input_grid": [F.grid.n_lat, F.grid.n_lon], "subdiv": args.subdiv,
              "seed": None, "frame_convention": FRAME_CONVENTION, **summary}
    if not h.is_body:
        report["mesh"] = None
        log.warning("not a body: margin %.3e", h.lindquist_margin)
        io.dump_json(out / "report.json", report)
        print(json.dumps(report, sort_keys=True))
        return EXIT_NOT_BODY
    mesh = export_mesh(h, args.subdiv)
    io.write_obj(out / "mesh.obj", mesh)
    audit = convexity_audit(mesh)
    report.update({"mesh": "mesh.obj", "vertices": len(mesh.vertices),
                   "faces": len(mesh.faces), "volume": mesh.volume(),
                   "audit": audit.to_json(), "seconds": time.perf_counter() - t0})
    io.dump_json(out / "report.json", report)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_forward(args) -> int:
    f, _ = io.read_scalar(args.density_file)
    h = GeneratingDensity(f, args.n_lat, args.n_lon)
    F = forward_field(h)
    io.write_flag(args.out, F, **_density_summary(h))
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    f, _ = io.read_scalar(args.density_file)
    h = GeneratingDensity(f, args.n_lat, args.n_lon)
    F = forward_field(h)
    lmax = max(f.lmax, 2) if args.lmax is None else args.lmax
    rep = consistency_residual(F, sample_count=args.samples, seed=args.seed, lmax=lmax)
    rec = _reconstruct(F, lmax, args.n_lat, args.n_lon)
    nodes = h.grid.nodes
    ref = h(nodes)
    sup = float(np.max(np.abs(ref)))
    density_err = float(np.max(np.abs(rec(nodes) - ref)))
    F2 = forward_field(rec, F.grid)
    coeff_err = float(max(np.max(np.abs(F2.a0 - F.a0)), np.max(np.abs(F2.a2 - F.a2)),
                          np.max(np.abs(F2.b2 - F.b2))))
    report = {"n_lat": args.n_lat, "n_lon": args.n_lon, "lmax": lmax, "seed": args.seed,
              "frame_convention": FRAME_CONVENTION,
              "consistency": rep.to_json(),
              "density_error": density_err, "density_sup": sup,
              "density_rel_error": density_err / sup if sup > 0 else float("inf"),
              "coeff_error": coeff_err,
              "source": _density_summary(h), "recovered": _density_summary(rec)}
    code = EXIT_OK
    if rec.is_body and args.subdiv >= 0:
        audit = convexity_audit(export_mesh(rec, args.subdiv))
        report["audit"] = audit.to_json()
    elif not rec.is_body:
        code = EXIT_NOT_BODY
    _emit(report, args.report)
    return code


def _grid_args(p, lmax: bool = False):
    p.add_argument("--n-lat", type=int, default=32)
    p.add_argument("--n-lon", type=int, default=64)
    if lmax:
        p.add_argument("--lmax", type=int, default=8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flagrecon", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic density and/or flag field")
    p.add_argument("kind", choices=["sphere", "harmonic"])
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--lmax", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.1)
    p.add_argument("--density", help="scalar field JSON output")
    p.add_argument("--flag", help="flag field JSON output")
    _grid_args(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="check the consistency condition of a flag field")
    p.add_argument("flag_file")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=5e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lmax", type=int, default=8)
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reconstruct", help="recover density and mesh from a flag field")
    p.add_argument("flag_file")
    p.add_argument("out_dir")
    _grid_args(p, lmax=True)
    p.add_argument("--subdiv", type=int, default=3)
    p.add_argument("--allow-extra-harmonics", action="store_true",
                   help="accept psi-harmonics outside {0, 2} (they do not affect the mean)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("forward", help="projection curvature radii of a density")
    p.add_argument("density_file")
    p.add_argument("out")
    _grid_args(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("roundtrip", help="forward, validate and reconstruct a density")
    p.add_argument("density_file")
    _grid_args(p)
    p.add_argument("--lmax", type=int, default=None)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subdiv", type=int, default=3, help="mesh audit level; -1 skips it")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FormatError as exc:
        log.error("input format error: %s", exc)
        return EXIT_FORMAT
    except NotABody as exc:
        log.error("%s", exc)
        return EXIT_NOT_BODY
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
