"""Flag functions stored as psi-harmonics per sphere-grid node.

At node ``omega`` a flag function is ``a0 + a2 cos 2psi + b2 sin 2psi`` with
``psi`` measured from ``canonical_frame(omega).e1``.  Other psi-harmonics can
be carried in ``extra`` only through the explicit hooks below; valid radius
functions never need them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HarmonicClassError
from .scalar_field import ScalarField, SphereGrid, analyze
from .sphere import TWO_PI, as_direction, canonical_frame, great_circle_point, transport_angle

INTERP_ORDER = 6


@dataclass(frozen=True, eq=False)
class FlagField:
    grid: SphereGrid
    a0: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    extra: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("a0", "a2", "b2"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.size != self.grid.size:
                raise ValueError(f"{name} has {arr.size} entries, grid has {self.grid.size}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        extra = {}
        for k, (a, b) in sorted(self.extra.items()):
            if k in (0, 2) or k < 0:
                raise ValueError(f"harmonic {k} is not an extra")
            extra[int(k)] = (np.asarray(a, float).reshape(-1), np.asarray(b, float).reshape(-1))
        object.__setattr__(self, "extra", extra)

    @classmethod
    def constant(cls, grid: SphereGrid, value: float) -> "FlagField":
        z = np.zeros(grid.size)
        return cls(grid, np.full(grid.size, float(value)), z, z)

    @classmethod
    def from_psi_samples(cls, grid: SphereGrid, psi, values, force: bool = False,
                         tol: float = 1e-9) -> "FlagField":
        """Fit psi-harmonics to sampled values (one row per node).

        Data carrying harmonics outside {0, 2} above ``tol`` (relative to the
        largest nodal value) is rejected unless ``force`` keeps them as extras.
        """
        psi = np.asarray(psi, dtype=float)
        values = np.asarray(values, dtype=float)
        kmax = (psi.size - 1) // 2
        if kmax < 2:
            raise ValueError("need at least 5 psi samples per node")
        cols = [np.ones_like(psi)]
        for k in range(1, kmax + 1):
            cols += [np.cos(k * psi), np.sin(k * psi)]
        coef, *_ = np.linalg.lstsq(np.stack(cols, axis=1), values.T, rcond=None)
        a0, a2, b2 = coef[0], coef[3], coef[4]
        extra = {k: (coef[2 * k - 1], coef[2 * k]) for k in range(1, kmax + 1) if k != 2}
        scale = max(1.0, float(np.max(np.abs(values))))
        worst = max(float(np.max(np.hypot(a, b))) for a, b in extra.values()) if extra else 0.0
        if worst > tol * scale and not force:
            k_bad = max(extra, key=lambda k: np.max(np.hypot(*extra[k])))
            raise HarmonicClassError(
                f"psi-harmonic {k_bad} present with amplitude {worst:.3e}; "
                "only harmonics 0 and 2 can be projection curvature radii")
        if not force:
            extra = {}
        return cls(grid, a0, a2, b2, extra)

    def with_harmonic(self, k: int, a, b=0.0) -> "FlagField":
        """Copy carrying an added ``a cos k psi + b sin k psi`` term (test hook)."""
        a = np.broadcast_to(np.asarray(a, float), (self.grid.size,))
        b = np.broadcast_to(np.asarray(b, float), (self.grid.size,))
        if k == 0:
            return FlagField(self.grid, self.a0 + a, self.a2, self.b2, self.extra)
        if k == 2:
            return FlagField(self.grid, self.a0, self.a2 + a, self.b2 + b, self.extra)
        extra = dict(self.extra)
        old = extra.get(k, (np.zeros(self.grid.size), np.zeros(self.grid.size)))
        extra[k] = (old[0] + a, old[1] + b)
        return FlagField(self.grid, self.a0, self.a2, self.b2, extra)

    def extra_amplitude(self) -> np.ndarray:
        """Per-node root-sum-square of all non-{0,2} harmonic coefficients."""
        total = np.zeros(self.grid.size)
        for a, b in self.extra.values():
            total += a * a + b * b
        return np.sqrt(total)

    def min_over_psi(self) -> np.ndarray:
        """Closed-form ``min_psi F`` per node (ignores extras)."""
        return self.a0 - np.hypot(self.a2, self.b2)

    def node_values(self, psi) -> np.ndarray:
        """``F(node, psi)`` at every node; ``psi`` broadcasts against nodes."""
        psi = np.asarray(psi, dtype=float)
        out = self.a0 + self.a2 * np.cos(2 * psi) + self.b2 * np.sin(2 * psi)
        for k, (a, b) in self.extra.items():
            out = out + a * np.cos(k * psi) + b * np.sin(k * psi)
        return out

    def __call__(self, omega, psi) -> np.ndarray:
        return evaluate_flag(self, omega, psi)


def mean_over_psi(F: FlagField, lmax: int = 8) -> ScalarField:
    """``(1/pi) * int_0^{2pi} F(omega, psi) dpsi = 2 a0``, analyzed to ``lmax``."""
    return analyze(2.0 * F.a0, F.grid, lmax)


def _lagrange_weights(x, nodes):
    # x: (M,), nodes: (M, p) -> (M, p)
    p = nodes.shape[1]
    w = np.ones_like(nodes)
    for k in range(p):
        for m in range(p):
            if m != k:
                w[:, k] *= (x - nodes[:, m]) / (nodes[:, k] - nodes[:, m])
    return w


def _stencil(grid: SphereGrid, omega: np.ndarray, order: int):
    """Node indices and tensor-product Lagrange weights around each query."""
    n_lat, n_lon = grid.n_lat, grid.n_lon
    half = order // 2
    theta = np.arccos(np.clip(omega[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(omega[:, 1], omega[:, 0]), TWO_PI)
    dphi = TWO_PI / n_lon

    i0 = np.searchsorted(grid.colat, theta) - 1
    rows = i0[:, None] + np.arange(1 - half, order - half + 1)[None, :]
    north = rows < 0
    south = rows >= n_lat
    actual = np.where(north, -rows - 1, np.where(south, 2 * n_lat - 1 - rows, rows))
    th_nodes = grid.colat[actual]
    th_nodes = np.where(north, -th_nodes, np.where(south, TWO_PI - th_nodes, th_nodes))
    flipped = north | south

    j0 = np.floor(phi / dphi).astype(int)
    cols = j0[:, None] + np.arange(1 - half, order - half + 1)[None, :]
    ph_nodes = cols * dphi

    wt = _lagrange_weights(theta, th_nodes)
    wp = _lagrange_weights(phi, ph_nodes)
    col_idx = np.mod(cols[:, None, :] + np.where(flipped, n_lon // 2, 0)[:, :, None], n_lon)
    idx = actual[:, :, None] * n_lon + col_idx
    return idx, wt[:, :, None] * wp[:, None, :]


def evaluate_flag(F: FlagField, omega, psi, order: int = INTERP_ORDER) -> np.ndarray:
    """``F(omega, psi)`` anywhere on the flag manifold.

    ``a0`` is interpolated as a scalar with a local tensor-product Lagrange
    stencil in colatitude/longitude (reflected across the poles).  The
    frame-dependent pairs ``(a2, b2)`` (and any extras) are first
    parallel-transported from each stencil node to ``omega`` by phase
    rotation, then interpolated the same way.
    """
    omega = as_direction(omega)
    scalar = omega.ndim == 1
    omega = np.atleast_2d(omega)
    psi = np.broadcast_to(np.asarray(psi, dtype=float), omega.shape[:1])
    grid = F.grid
    if grid.n_lon % 2:
        raise ValueError("interpolation needs an even n_lon")
    order = min(order, 2 * grid.n_lat, grid.n_lon)
    idx, w = _stencil(grid, omega, order)

    a0 = np.sum(w * F.a0[idx], axis=(1, 2))
    delta = transport_angle(grid.nodes[idx], omega[:, None, None, :])
    c2, s2 = np.cos(2 * delta), np.sin(2 * delta)
    a2n, b2n = F.a2[idx], F.b2[idx]
    a2 = np.sum(w * (a2n * c2 - b2n * s2), axis=(1, 2))
    b2 = np.sum(w * (a2n * s2 + b2n * c2), axis=(1, 2))
    out = a0 + a2 * np.cos(2 * psi) + b2 * np.sin(2 * psi)
    for k, (ak, bk) in F.extra.items():
        ck, sk = np.cos(k * delta), np.sin(k * delta)
        akn, bkn = ak[idx], bk[idx]
        a = np.sum(w * (akn * ck - bkn * sk), axis=(1, 2))
        b = np.sum(w * (akn * sk + bkn * ck), axis=(1, 2))
        out = out + a * np.cos(k * psi) + b * np.sin(k * psi)
    return float(out[0]) if scalar else out


def transported_psi(omega, psi, target) -> np.ndarray:
    """Angle, in ``target``'s canonical frame, of the spatial line ``(omega, psi)``.

    ``target`` must share the tangent plane (``target = +-omega``).
    """
    v = great_circle_point(omega, psi)
    e1, e2, _ = canonical_frame(np.asarray(target, dtype=float))
    return np.mod(np.arctan2(np.sum(v * e2, -1), np.sum(v * e1, -1)), TWO_PI)


@dataclass(frozen=True)
class SymmetryReport:
    max_deviation: float
    tol: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol


def validate_symmetry(F: FlagField, samples: int = 200, seed: int = 0,
                      tol: float | None = None) -> SymmetryReport:
    """Compare ``F(omega, psi)`` with ``F(-omega, psi')`` for the same spatial line.

    All grid nodes are paired with their antipodal node at three angles;
    ``samples`` further off-grid pairs are drawn from a seeded generator.
    Invariance under ``psi -> psi + pi`` holds by construction unless odd
    extras were forced in, which the comparison also exposes.
    """
    grid = F.grid
    if tol is None:
        tol = 1e-6 * max(1.0, float(np.max(np.abs(F.a0))))
    anti = grid.antipode_index()
    worst = 0.0
    count = 0
    for psi in (0.0, np.pi / 4, np.pi / 2):
        psi_t = transported_psi(grid.nodes, psi, -grid.nodes)
        here = F.node_values(psi)
        there = _node_values_at(F, anti, psi_t)
        worst = max(worst, float(np.max(np.abs(here - there))))
        count += grid.size
    for k, _ in F.extra.items():
        if k % 2:
            # psi -> psi + pi symmetry broken by construction
            vals = F.node_values(0.0) - F.node_values(np.pi)
            worst = max(worst, float(np.max(np.abs(vals))))
    if samples > 0:
        rng = np.random.default_rng(seed)
        om = as_direction(rng.normal(size=(samples, 3)))
        ps = rng.uniform(0.0, TWO_PI, samples)
        here = evaluate_flag(F, om, ps)
        there = evaluate_flag(F, -om, transported_psi(om, ps, -om))
        worst = max(worst, float(np.max(np.abs(here - there))))
        count += samples
    return SymmetryReport(worst, tol, count)


def _node_values_at(F: FlagField, idx, psi):
    out = F.a0[idx] + F.a2[idx] * np.cos(2 * psi) + F.b2[idx] * np.sin(2 * psi)
    for k, (a, b) in F.extra.items():
        out = out + a[idx] * np.cos(k * psi) + b[idx] * np.sin(k * psi)
    return out
