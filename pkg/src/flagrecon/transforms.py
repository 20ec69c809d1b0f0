"""Integral transforms linking flag functions, densities and support functions.

Every transform here evaluates an even field at points laid out in the
canonical frame of a node (a fixed *stencil* of pole-relative coordinates)
and takes a fixed weighted sum.  Two execution paths share the same stencil:

* ``_apply_at``: arbitrary nodes, direct synthesis at every point;
* ``_apply_on_grid``: all nodes of a :class:`SphereGrid`.  Nodes on one ring
  are z-rotations of each other and so are their canonical frames, so the
  weighted sums are formed once per ring on the harmonic basis and applied
  to z-rotated coefficients.  Same quadrature, far fewer syntheses.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NotABody, NumericalBlowup
from .flag_field import FlagField, evaluate_flag, mean_over_psi
from .scalar_field import ScalarField, SphereGrid, analyze, evaluate, real_harmonics
from .sphere import FRAME_CONVENTION, TWO_PI, Flag, as_direction, canonical_frame

N_LAT = 32
N_LON = 64
LMAX = 8
H_FD = 1e-4
BLOWUP = 1e12
_CHUNK_POINTS = 2_000_000


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FLAGRECON_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Stencil:
    """Pole-relative sample points and the weights that combine them.

    ``coords[s] = (c1, c2, c3)`` places point ``s`` at
    ``c1 e1 + c2 e2 + c3 omega``; output ``k`` is ``sum_s weights[k, s] f(p_s)``.
    """

    coords: np.ndarray
    weights: np.ndarray

    def points(self, omega: np.ndarray) -> np.ndarray:
        e1, e2, om = canonical_frame(omega)
        c = self.coords
        return (c[:, 0, None] * e1[..., None, :] + c[:, 1, None] * e2[..., None, :]
                + c[:, 2, None] * om[..., None, :])

    def check(self, where: str):
        if not np.all(np.isfinite(self.weights)):
            raise NumericalBlowup(f"{where}: non-finite quadrature weight")


def _guard(values: np.ndarray, scale: np.ndarray, where: str):
    mag = np.max(np.abs(values) * scale) if values.size else 0.0
    if not np.isfinite(mag) or mag > BLOWUP:
        raise NumericalBlowup(f"{where}: integrand magnitude {mag:.3e} exceeds {BLOWUP:g}")


def _apply_at(f: ScalarField, stencil: Stencil, omega: np.ndarray,
              scale: np.ndarray | None = None, where: str = "transform") -> np.ndarray:
    """Outputs ``(M, n_out)`` at arbitrary nodes ``omega`` of shape ``(M, 3)``."""
    stencil.check(where)
    S = stencil.coords.shape[0]
    per = max(1, _CHUNK_POINTS // S)
    chunks = [omega[i:i + per] for i in range(0, omega.shape[0], per)]

    def run(chunk):
        vals = evaluate(f, stencil.points(chunk))
        if scale is not None:
            _guard(vals, scale, where)
        return vals @ stencil.weights.T

    if _threads() > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(_threads()) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, stencil.weights.shape[0]))


def _apply_on_grid(f: ScalarField, stencil: Stencil, grid: SphereGrid,
                   scale: np.ndarray | None = None, where: str = "transform") -> np.ndarray:
    """Outputs ``(grid.size, n_out)`` at every grid node, ring by ring."""
    stencil.check(where)
    rotated = f.rotated_z(grid.lon)
    out = np.empty((grid.n_lat, grid.n_lon, stencil.weights.shape[0]))
    nodes = grid.nodes.reshape(grid.n_lat, grid.n_lon, 3)
    for i in range(grid.n_lat):
        basis = real_harmonics(stencil.points(nodes[i, 0]), f.lmax)
        if scale is not None:
            _guard(basis @ f.coeffs, scale, where)
        out[i] = (stencil.weights @ basis @ rotated).T
    return out.reshape(grid.size, -1)


def _ring(n_lon: int, nu: float):
    phi = TWO_PI * np.arange(n_lon) / n_lon
    c = np.cos(nu)
    return phi, np.stack([c * np.cos(phi), c * np.sin(phi), np.full_like(phi, np.sin(nu))], axis=1)


def _half_gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


# ---------------------------------------------------------------- consistency


def consistency_stencil(n_lat: int = N_LAT, n_lon: int = N_LON) -> tuple[Stencil, np.ndarray]:
    """Point ``omega`` itself plus ``n_lat`` latitude rings in ``(0, pi/2)``.

    Outputs: ``Fbar(omega)``, and ``int dnu / cos nu [int Fbar cos 2phi dphi]``
    with its ``sin 2phi`` twin.  Each ring's phi-sum is complete before it
    is weighted by ``1/cos nu``.
    """
    nu, wnu = _half_gauss(n_lat, 0.0, np.pi / 2)
    dphi = TWO_PI / n_lon
    coords = [np.array([[0.0, 0.0, 1.0]])]
    rows = np.zeros((3, 1 + n_lat * n_lon))
    rows[0, 0] = 1.0
    scale = [np.ones(1)]
    for i, (v, w) in enumerate(zip(nu, wnu)):
        phi, pts = _ring(n_lon, v)
        coords.append(pts)
        sl = slice(1 + i * n_lon, 1 + (i + 1) * n_lon)
        rows[1, sl] = w / np.cos(v) * dphi * np.cos(2 * phi)
        rows[2, sl] = w / np.cos(v) * dphi * np.sin(2 * phi)
        scale.append(np.full(n_lon, 1.0 / np.cos(v)))
    return Stencil(np.concatenate(coords), rows), np.concatenate(scale)


def _rhs_from_outputs(out: np.ndarray) -> np.ndarray:
    return np.stack([0.5 * out[:, 0], -out[:, 1] / TWO_PI, -out[:, 2] / TWO_PI], axis=1)


def consistency_rhs_coeffs(Fbar: ScalarField, omega=None, grid: SphereGrid | None = None,
                           n_lat: int = N_LAT, n_lon: int = N_LON) -> np.ndarray:
    """psi-harmonics ``(r0, r2, s2)`` of the consistency right-hand side.

    The right-hand side at ``(omega, psi)`` is ``r0 + r2 cos 2psi + s2 sin 2psi``.
    Give either explicit directions ``omega`` or a ``grid``.
    """
    stencil, scale = consistency_stencil(n_lat, n_lon)
    if grid is not None:
        out = _apply_on_grid(Fbar, stencil, grid, scale, "consistency_rhs")
    else:
        out = _apply_at(Fbar, stencil, np.atleast_2d(as_direction(omega)), scale,
                        "consistency_rhs")
    return _rhs_from_outputs(out)


def consistency_rhs(Fbar: ScalarField, flag: Flag, n_lat: int = N_LAT,
                    n_lon: int = N_LON) -> float:
    """``Fbar(w)/2 - (1/2pi) int_0^{pi/2} [int_0^{2pi} Fbar((nu,phi)_w) cos 2(phi-psi) dphi] dnu / cos nu``.

    Inner longitude integral by the periodic trapezoid rule, outer latitude
    integral by open Gauss-Legendre on ``[0, pi/2]``.
    """
    nu, wnu = _half_gauss(n_lat, 0.0, np.pi / 2)
    e1, e2, om = canonical_frame(flag.omega)
    phi = TWO_PI * np.arange(n_lon) / n_lon
    weight = np.cos(2 * (phi - flag.psi))
    outer = 0.0
    for v, w in zip(nu, wnu):
        pts = (np.cos(v) * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
               + np.sin(v) * om)
        vals = Fbar(pts) * weight
        _guard(vals, 1.0 / np.cos(v), "consistency_rhs")
        inner = float(np.sum(vals)) * TWO_PI / n_lon
        outer += w * inner / np.cos(v)
    return 0.5 * Fbar(om) - outer / TWO_PI


@dataclass(frozen=True)
class ConsistencyReport:
    max_residual: float
    residual_by_harmonic: dict
    samples: int
    n_lat: int
    n_lon: int
    lmax: int
    seed: int

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "residual_by_harmonic": dict(self.residual_by_harmonic),
            "samples": self.samples,
            "n_lat": self.n_lat,
            "n_lon": self.n_lon,
            "lmax": self.lmax,
            "seed": self.seed,
            "frame_convention": FRAME_CONVENTION,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def consistency_residual(F: FlagField, sample_count: int = 200, seed: int = 0,
                         lmax: int = LMAX, n_lat: int | None = None,
                         n_lon: int | None = None) -> ConsistencyReport:
    """How far ``F`` is from satisfying the consistency condition.

    Checked at every grid node for ``psi`` in {0, pi/4, pi/2} and at
    ``sample_count`` seeded random flags (``F`` interpolated there).  The
    quadrature resolution defaults to ``F``'s own grid.
    """
    grid = F.grid
    n_lat = grid.n_lat if n_lat is None else n_lat
    n_lon = grid.n_lon if n_lon is None else n_lon
    Fbar = mean_over_psi(F, min(lmax, _even_floor(grid.max_lmax())))
    rhs = consistency_rhs_coeffs(Fbar, grid=grid, n_lat=n_lat, n_lon=n_lon)

    worst = 0.0
    for psi in (0.0, np.pi / 4, np.pi / 2):
        model = rhs[:, 0] + rhs[:, 1] * np.cos(2 * psi) + rhs[:, 2] * np.sin(2 * psi)
        worst = max(worst, float(np.max(np.abs(F.node_values(psi) - model))))
    if sample_count > 0:
        rng = np.random.default_rng(seed)
        om = as_direction(rng.normal(size=(sample_count, 3)))
        ps = rng.uniform(0.0, TWO_PI, sample_count)
        r = consistency_rhs_coeffs(Fbar, om, n_lat=n_lat, n_lon=n_lon)
        model = r[:, 0] + r[:, 1] * np.cos(2 * ps) + r[:, 2] * np.sin(2 * ps)
        worst = max(worst, float(np.max(np.abs(evaluate_flag(F, om, ps) - model))))

    by_harmonic = {
        "h0": float(np.max(np.abs(F.a0 - rhs[:, 0]))),
        "h2": float(np.max(np.hypot(F.a2 - rhs[:, 1], F.b2 - rhs[:, 2]))),
        "other": float(np.max(F.extra_amplitude())),
    }
    return ConsistencyReport(worst, by_harmonic, sample_count, n_lat, n_lon, Fbar.lmax, seed)


def _even_floor(n: int) -> int:
    return n - (n % 2)


# ---------------------------------------------------------------- densities


@dataclass(frozen=True, eq=False)
class GeneratingDensity:
    """Even density ``h`` together with the grid used for its checks."""

    field: ScalarField
    n_lat: int = N_LAT
    n_lon: int = N_LON
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def grid(self) -> SphereGrid:
        return SphereGrid(self.n_lat, self.n_lon)

    @cached_property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.field(self.grid.nodes))))

    @cached_property
    def lindquist_margin(self) -> float:
        return lindquist_margin(self)

    @property
    def tol_pos(self) -> float:
        return 1e-9 * self.sup_norm

    @property
    def is_body(self) -> bool:
        return self.lindquist_margin >= -self.tol_pos

    def require_body(self):
        if not self.is_body:
            raise NotABody(
                f"Lindquist margin {self.lindquist_margin:.6g} < -{self.tol_pos:.3g}")

    def __call__(self, p):
        return self.field(p)


def as_density(h) -> GeneratingDensity:
    return h if isinstance(h, GeneratingDensity) else GeneratingDensity(h)


def blaschke_stencil(n_lat: int = N_LAT, n_lon: int = N_LON,
                     h_fd: float = H_FD) -> tuple[Stencil, np.ndarray]:
    """Great circle of ``Omega`` plus ``u +- h_fd`` rings for each Gauss node ``u``."""
    u, wu = _half_gauss(n_lat, 0.0, np.pi / 2)
    dtau = TWO_PI / n_lon
    norm = 1.0 / (8.0 * np.pi ** 2)
    tau, eq = _ring(n_lon, 0.0)
    coords = [eq]
    row = [np.full(n_lon, norm * dtau)]
    scale = [np.full(n_lon, norm * dtau)]
    for v, w in zip(u, wu):
        sing = (1.0 - np.sin(v)) / np.sin(v)
        for sign in (1.0, -1.0):
            _, pts = _ring(n_lon, v + sign * h_fd)
            coords.append(pts)
            row.append(np.full(n_lon, -norm * w * sing * dtau * sign / (2.0 * h_fd)))
            scale.append(np.full(n_lon, sing / (2.0 * h_fd)))
    return Stencil(np.concatenate(coords), np.concatenate(row)[None, :]), np.concatenate(scale)


def blaschke_density(Fbar: ScalarField, n_lat: int = N_LAT, n_lon: int = N_LON,
                     lmax: int | None = None, h_fd: float = H_FD) -> GeneratingDensity:
    """Generating density recovered from the mean radius function ``Fbar``.

    At every grid node ``Omega``::

        f = 1/(8 pi^2) int Fbar((0,tau)) dtau
            - 1/(8 pi^2) int_0^{pi/2} [int d/du Fbar((u,tau)) dtau] (1 - sin u)/sin u du

    The tau-integral is taken first (trapezoid); it vanishes linearly at
    ``u = 0`` for even ``Fbar``, which tames the weight.  The u-integral uses
    open Gauss-Legendre nodes and the u-derivative a central difference.
    """
    lmax = Fbar.lmax if lmax is None else lmax
    grid = SphereGrid(n_lat, n_lon)
    stencil, scale = blaschke_stencil(n_lat, n_lon, h_fd)
    values = _apply_on_grid(Fbar, stencil, grid, scale, "blaschke_density")[:, 0]
    f = analyze(values, grid, lmax)
    return GeneratingDensity(f, n_lat, n_lon)


def blaschke_at(Fbar: ScalarField, omega, n_lat: int = N_LAT, n_lon: int = N_LON,
                h_fd: float = H_FD) -> np.ndarray:
    """Nodal Blaschke values at arbitrary directions (direct synthesis path)."""
    stencil, scale = blaschke_stencil(n_lat, n_lon, h_fd)
    return _apply_at(Fbar, stencil, np.atleast_2d(as_direction(omega)), scale,
                     "blaschke_density")[:, 0]


# ---------------------------------------------------------------- forward map


def _circle_stencil(n_lon: int) -> Stencil:
    phi, eq = _ring(n_lon, 0.0)
    dphi = TWO_PI / n_lon
    return Stencil(eq, np.stack([np.full(n_lon, dphi), dphi * np.cos(2 * phi),
                                 dphi * np.sin(2 * phi)]))


def projection_radius(h, flag: Flag, n_lon: int | None = None) -> float:
    """``2 int_{S_w} cos^2(psi - phi) h((0,phi)_w) dphi`` by the trapezoid rule."""
    h = as_density(h)
    n_lon = h.n_lon if n_lon is None else n_lon
    e1, e2, _ = canonical_frame(flag.omega)
    phi = TWO_PI * np.arange(n_lon) / n_lon
    pts = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    return float(2.0 * np.sum(np.cos(flag.psi - phi) ** 2 * h(pts)) * TWO_PI / n_lon)


def forward_field(h, grid: SphereGrid | None = None) -> FlagField:
    """Projection curvature radius function of density ``h`` on ``grid``.

    Per node: ``a0 = int h dphi``, ``(a2, b2) = int h (cos 2phi, sin 2phi) dphi``
    over the node's great circle, so that ``R = a0 + a2 cos 2psi + b2 sin 2psi``.
    """
    h = as_density(h)
    grid = h.grid if grid is None else grid
    out = _apply_on_grid(h.field, _circle_stencil(grid.n_lon), grid)
    return FlagField(grid, out[:, 0], out[:, 1], out[:, 2])


def forward_coeffs_at(h, omega, n_lon: int | None = None) -> np.ndarray:
    """``(a0, a2, b2)`` of the radius function at arbitrary directions."""
    h = as_density(h)
    n_lon = h.n_lon if n_lon is None else n_lon
    return _apply_at(h.field, _circle_stencil(n_lon), np.atleast_2d(as_direction(omega)))


def lindquist_margin(h) -> float:
    """``min_{omega, psi} int_{S_w} cos^2(psi - phi) h dphi`` over the density's grid.

    The integral equals ``R/2``, so the psi-minimum is ``(a0 - |(a2, b2)|)/2``.
    """
    F = forward_field(as_density(h))
    return float(0.5 * np.min(F.min_over_psi()))


# ---------------------------------------------------------------- support function


def support_stencil(n_lat: int = N_LAT, n_lon: int = N_LON) -> Stencil:
    """Pole-aligned grid split at the equator, so ``|<xi, Omega>|`` is smooth per half."""
    t, wt = _half_gauss(max(1, n_lat // 2), 0.0, 1.0)
    t = np.concatenate([t, -t])
    wt = np.concatenate([wt, wt])
    phi = TWO_PI * np.arange(n_lon) / n_lon
    T, P = np.meshgrid(t, phi, indexing="ij")
    S = np.sqrt(1.0 - T * T)
    coords = np.stack([S * np.cos(P), S * np.sin(P), T], axis=-1).reshape(-1, 3)
    weights = (np.abs(T) * wt[:, None] * TWO_PI / n_lon).reshape(1, -1)
    return Stencil(coords, weights)


class SupportEvaluator:
    """``H(xi) = int |<xi, Omega>| h(Omega) dOmega``, extended 1-homogeneously.

    ``valid`` is False when the density fails the Lindquist test; values are
    still returned but are not the support function of any body.
    """

    def __init__(self, h, n_lat: int | None = None, n_lon: int | None = None):
        self.density = as_density(h)
        self.n_lat = self.density.n_lat if n_lat is None else n_lat
        self.n_lon = self.density.n_lon if n_lon is None else n_lon
        self._stencil = support_stencil(self.n_lat, self.n_lon)

    @property
    def valid(self) -> bool:
        return self.density.is_body

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        scalar = xi.ndim == 1
        xi = np.atleast_2d(xi)
        r = np.linalg.norm(xi, axis=-1)
        out = np.zeros(xi.shape[0])
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz] * _apply_at(self.density.field, self._stencil, xi[nz] / r[nz, None])[:, 0]
        return float(out[0]) if scalar else out


def support_function(h, xi) -> np.ndarray:
    return SupportEvaluator(h)(xi)
