"""JSON field files, atomic writes and Wavefront mesh output.

Scalar field::

    {"kind": "scalar_field", "lmax": L, "coeffs": [[l, m, value], ...]}

Flag field::

    {"kind": "flag_field", "n_lat": .., "n_lon": .., "frame_convention": "zcross-v1",
     "nodes": [{"dir": [x, y, z], "a0": .., "a2": .., "b2": ..}, ...]}

Nodes are listed in grid order.  A node may carry ``"extra": [[k, a, b], ...]``
for psi-harmonics outside {0, 2}; readers reject it unless asked not to.
Readers ignore unknown top-level keys, so annotations such as
``"body_valid"`` ride along freely.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError, HarmonicClassError
from .flag_field import FlagField
from .scalar_field import ScalarField, SphereGrid, harmonic_index
from .sphere import FRAME_CONVENTION

NODE_TOL = 1e-9


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(path, obj: dict):
    write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(path) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: top level must be an object")
    return obj


def _number(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise FormatError(f"{what} must be a finite number, got {v!r}")
    return float(v)


def _integer(v, what: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"{what} must be an integer, got {v!r}")
    return v


# ---------------------------------------------------------------- scalar fields


def scalar_to_json(f: ScalarField, **annotations) -> dict:
    obj = {"kind": "scalar_field", "lmax": f.lmax,
           "coeffs": [[l, m, float(v)] for (l, m), v in f.terms()]}
    obj.update(annotations)
    return obj


def scalar_from_json(obj: dict) -> ScalarField:
    if obj.get("kind") != "scalar_field":
        raise FormatError(f"expected kind 'scalar_field', got {obj.get('kind')!r}")
    lmax = _integer(obj.get("lmax"), "lmax")
    if lmax < 0 or lmax % 2:
        raise FormatError(f"lmax must be even and non-negative, got {lmax}")
    rows = obj.get("coeffs")
    if not isinstance(rows, list):
        raise FormatError("coeffs must be a list of [l, m, value]")
    valid = set(harmonic_index(lmax))
    terms = {}
    for row in rows:
        if not isinstance(row, list) or len(row) != 3:
            raise FormatError(f"bad coefficient entry {row!r}")
        l, m = _integer(row[0], "l"), _integer(row[1], "m")
        if l % 2:
            raise FormatError(f"odd degree l={l} in an even field")
        if (l, m) not in valid:
            raise FormatError(f"(l, m) = ({l}, {m}) outside lmax={lmax}")
        if (l, m) in terms:
            raise FormatError(f"duplicate coefficient ({l}, {m})")
        terms[(l, m)] = _number(row[2], f"coefficient ({l}, {m})")
    return ScalarField.from_dict(lmax, terms)


def read_scalar(path) -> tuple[ScalarField, dict]:
    """Field plus the raw object (for annotations)."""
    obj = _load(path)
    return scalar_from_json(obj), obj


def write_scalar(path, f: ScalarField, **annotations):
    dump_json(path, scalar_to_json(f, **annotations))


# ---------------------------------------------------------------- flag fields


def flag_to_json(F: FlagField, **annotations) -> dict:
    nodes = []
    for k, p in enumerate(F.grid.nodes):
        node = {"dir": [float(x) for x in p], "a0": float(F.a0[k]),
                "a2": float(F.a2[k]), "b2": float(F.b2[k])}
        if F.extra:
            node["extra"] = [[h, float(a[k]), float(b[k])] for h, (a, b) in F.extra.items()]
        nodes.append(node)
    obj = {"kind": "flag_field", "n_lat": F.grid.n_lat, "n_lon": F.grid.n_lon,
           "frame_convention": FRAME_CONVENTION, "nodes": nodes}
    obj.update(annotations)
    return obj


def flag_from_json(obj: dict, allow_extra: bool = False) -> FlagField:
    """Parse and check a flag file against the grid it declares.

    Raises :class:`HarmonicClassError` for non-{0, 2} psi-harmonics unless
    ``allow_extra`` keeps them (for diagnosing invalid data).
    """
    if obj.get("kind") != "flag_field":
        raise FormatError(f"expected kind 'flag_field', got {obj.get('kind')!r}")
    conv = obj.get("frame_convention")
    if conv != FRAME_CONVENTION:
        raise FormatError(f"frame_convention {conv!r} does not match {FRAME_CONVENTION!r}")
    n_lat, n_lon = _integer(obj.get("n_lat"), "n_lat"), _integer(obj.get("n_lon"), "n_lon")
    if n_lat < 1 or n_lon < 2 or n_lon % 2:
        raise FormatError(f"unsupported grid {n_lat} x {n_lon} (n_lon must be even)")
    grid = SphereGrid(n_lat, n_lon)
    nodes = obj.get("nodes")
    if not isinstance(nodes, list) or len(nodes) != grid.size:
        raise FormatError(f"expected {grid.size} nodes for a {n_lat} x {n_lon} grid")

    a0, a2, b2 = (np.empty(grid.size) for _ in range(3))
    extra: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for k, node in enumerate(nodes):
        if not isinstance(node, dict):
            raise FormatError(f"node {k} is not an object")
        d = node.get("dir")
        if not isinstance(d, list) or len(d) != 3:
            raise FormatError(f"node {k}: dir must be [x, y, z]")
        d = np.array([_number(x, f"node {k} dir") for x in d])
        if np.max(np.abs(d - grid.nodes[k])) > NODE_TOL:
            raise FormatError(f"node {k}: dir {d.tolist()} is not grid node {grid.nodes[k].tolist()}")
        a0[k] = _number(node.get("a0"), f"node {k} a0")
        a2[k] = _number(node.get("a2"), f"node {k} a2")
        b2[k] = _number(node.get("b2"), f"node {k} b2")
        for row in node.get("extra", []):
            if not isinstance(row, list) or len(row) != 3:
                raise FormatError(f"node {k}: bad extra entry {row!r}")
            h = _integer(row[0], "harmonic")
            if h in (0, 2) or h < 0:
                raise FormatError(f"node {k}: harmonic {h} cannot be an extra")
            if not allow_extra:
                raise HarmonicClassError(
                    f"node {k}: psi-harmonic {h} present; only harmonics 0 and 2 "
                    "can be projection curvature radii")
            a, b = extra.setdefault(h, (np.zeros(grid.size), np.zeros(grid.size)))
            a[k] += _number(row[1], f"node {k} extra")
            b[k] += _number(row[2], f"node {k} extra")
    return FlagField(grid, a0, a2, b2, extra)


def read_flag(path, allow_extra: bool = False) -> tuple[FlagField, dict]:
    obj = _load(path)
    return flag_from_json(obj, allow_extra), obj


def write_flag(path, F: FlagField, **annotations):
    dump_json(path, flag_to_json(F, **annotations))


def write_obj(path, mesh):
    write_atomic(path, mesh.to_obj())
