"""Boundary meshes of bodies given by a generating density."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateMesh
from .sphere import as_direction, canonical_frame
from .transforms import SupportEvaluator, as_density

FD_STEP = 1e-4
MIN_SOLID_ANGLE = 1e-12


def icosphere(subdivisions: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosphere ``(vertices, faces)`` with outward (counter-clockwise) faces."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    V = np.array(verts)
    F = np.array(faces, dtype=np.int64)
    flip = np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]])) < 0
    F[flip] = F[flip][:, ::-1]
    return V, F


def antipodal_pairs(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Index ``j`` with ``points[j] = -points[i]`` for every ``i``."""
    dist, idx = cKDTree(points).query(-points)
    if np.any(dist > tol):
        raise ValueError(f"direction set is not centrally symmetric (gap {dist.max():.3e})")
    return idx


def boundary_point(h, omega, step: float = FD_STEP, support: SupportEvaluator | None = None):
    """Point of the body's boundary with outer normal ``omega``.

    ``H(omega) omega + grad_S H(omega)``, the tangential gradient taken by
    central differences along the canonical frame with angular ``step``.
    """
    h = as_density(h)
    h.require_body()
    H = SupportEvaluator(h) if support is None else support
    omega = as_direction(omega)
    scalar = omega.ndim == 1
    omega = np.atleast_2d(omega)
    e1, e2, _ = canonical_frame(omega)
    c, s = np.cos(step), np.sin(step)
    probes = np.concatenate([omega, c * omega + s * e1, c * omega - s * e1,
                             c * omega + s * e2, c * omega - s * e2])
    vals = H(probes).reshape(5, -1)
    g1 = (vals[1] - vals[2]) / (2.0 * step)
    g2 = (vals[3] - vals[4]) / (2.0 * step)
    out = vals[0][:, None] * omega + g1[:, None] * e1 + g2[:, None] * e2
    return out[0] if scalar else out


@dataclass(frozen=True, eq=False)
class BodyMesh:
    """Triangulated boundary with the supporting data it was built from.

    ``normals[i]``/``support[i]`` give the supporting half-space
    ``<x, normals[i]> <= support[i]`` whose contact point is ``vertices[i]``.
    """

    vertices: np.ndarray
    faces: np.ndarray
    symmetry_pairs: np.ndarray
    normals: np.ndarray | None = None
    support: np.ndarray | None = None

    def diameter(self) -> float:
        return float(2.0 * np.max(np.linalg.norm(self.vertices, axis=1)))

    def signed_volumes(self) -> np.ndarray:
        V, F = self.vertices, self.faces
        return np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]])) / 6.0

    def volume(self) -> float:
        return float(np.sum(self.signed_volumes()))

    def to_obj(self) -> str:
        lines = ["v %.9f %.9f %.9f" % tuple(v) for v in self.vertices]
        lines += ["f %d %d %d" % tuple(f + 1) for f in self.faces]
        return "\n".join(lines) + "\n"


def face_solid_angles(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Solid angle of each face seen from the origin (Van Oosterom-Strackee)."""
    a, b, c = (vertices[faces[:, k]] for k in range(3))
    la, lb, lc = (np.linalg.norm(x, axis=1) for x in (a, b, c))
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (la * lb * lc + np.einsum("ij,ij->i", a, b) * lc
           + np.einsum("ij,ij->i", a, c) * lb + np.einsum("ij,ij->i", b, c) * la)
    return 2.0 * np.arctan2(num, den)


def export_mesh(h, subdivisions: int = 3) -> BodyMesh:
    """Map icosphere directions through :func:`boundary_point`."""
    h = as_density(h)
    h.require_body()
    dirs, faces = icosphere(subdivisions)
    H = SupportEvaluator(h)
    verts = boundary_point(h, dirs, support=H)
    solid = face_solid_angles(verts, faces)
    if np.any(solid < MIN_SOLID_ANGLE):
        bad = int(np.sum(solid < MIN_SOLID_ANGLE))
        raise DegenerateMesh(f"{bad} faces subtend less than {MIN_SOLID_ANGLE:g} sr")
    return BodyMesh(verts, faces, antipodal_pairs(dirs), dirs, H(dirs))


@dataclass(frozen=True)
class ConvexityReport:
    max_violation: float
    diameter: float
    planes: int
    misoriented_faces: int
    symmetry_deviation: float

    @property
    def relative_violation(self) -> float:
        return self.max_violation / self.diameter if self.diameter > 0 else np.inf

    def passed(self, rel_tol: float = 1e-6, sym_tol: float = 1e-8) -> bool:
        return (self.relative_violation < rel_tol and self.misoriented_faces == 0
                and self.symmetry_deviation < sym_tol)

    def to_json(self) -> dict:
        return {"max_violation": self.max_violation, "diameter": self.diameter,
                "relative_violation": self.relative_violation, "planes": self.planes,
                "misoriented_faces": self.misoriented_faces,
                "symmetry_deviation": self.symmetry_deviation, "passed": self.passed()}


def symmetry_deviation(mesh: BodyMesh) -> float:
    """Largest ``|v_i + v_pair(i)|`` over all vertices."""
    return float(np.max(np.linalg.norm(mesh.vertices + mesh.vertices[mesh.symmetry_pairs], axis=1)))


def convexity_audit(mesh: BodyMesh) -> ConvexityReport:
    """Worst excursion of any vertex beyond any sampled supporting plane.

    Planes are the stored supporting half-spaces when present, otherwise the
    face planes.  Also counts inward-oriented faces and the central-symmetry gap.
    """
    V = mesh.vertices
    if mesh.normals is not None and mesh.support is not None:
        normals, offsets = mesh.normals, mesh.support
    else:
        a, b, c = (V[mesh.faces[:, k]] for k in range(3))
        normals = np.cross(b - a, c - a)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.einsum("ij,ij->i", normals, a)
    worst = -np.inf
    for start in range(0, normals.shape[0], 512):
        proj = V @ normals[start:start + 512].T - offsets[start:start + 512]
        worst = max(worst, float(proj.max()))
    return ConvexityReport(max(worst, 0.0), mesh.diameter(), int(normals.shape[0]),
                           int(np.sum(mesh.signed_volumes() <= 0)), symmetry_deviation(mesh))
