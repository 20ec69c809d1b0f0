"""Synthetic ground truth and dense brute-force reference integrators.

The ``brute_force_*`` functions deliberately share no quadrature code with
:mod:`flagrecon.transforms`; they only reuse the point evaluator and the
frame convention, and run at much higher resolution.

Random densities draw from ``numpy.random.Generator(PCG64(seed))``, a fixed,
documented bit generator, so seeded outputs are reproducible.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from .flag_field import FlagField
from .scalar_field import ScalarField
from .sphere import TWO_PI, Flag, as_direction, canonical_frame
from .transforms import N_LAT, N_LON, GeneratingDensity, SupportEvaluator, lindquist_margin


def make_sphere(r: float, n_lat: int = N_LAT, n_lon: int = N_LON):
    """Ball of radius ``r``: ``h = r/(2 pi)``, ``F = r``, ``H = r``."""
    if r <= 0:
        raise ValueError("radius must be positive")
    h = GeneratingDensity(ScalarField.constant(r / TWO_PI), n_lat, n_lon,
                          meta={"kind": "sphere", "radius": r})
    F = FlagField.constant(h.grid, r)
    return h, F, SupportEvaluator(h)


def make_harmonic(lmax: int, seed: int, margin_target: float, n_lat: int = N_LAT,
                  n_lon: int = N_LON) -> GeneratingDensity:
    """Unit-ball density plus a seeded even perturbation of degrees 2..lmax.

    The perturbation is scaled so that the Lindquist margin on the
    ``n_lat x n_lon`` grid equals ``margin_target``; since the constant part
    contributes exactly ``1/2`` to the margin, targets must be below ``1/2``.
    """
    if lmax < 2 or lmax % 2:
        raise ValueError("lmax must be even and >= 2")
    base = 1.0 / TWO_PI
    if margin_target >= np.pi * base:
        raise ValueError(f"margin_target must be < {np.pi * base:.3g}")
    rng = np.random.Generator(np.random.PCG64(seed))
    terms = {}
    for l in range(2, lmax + 1, 2):
        for m in range(-l, l + 1):
            terms[(l, m)] = rng.uniform(-1.0, 1.0) / (l + 1)
    g = GeneratingDensity(ScalarField.from_dict(lmax, terms), n_lat, n_lon)
    m_g = lindquist_margin(g)
    if m_g >= 0:
        raise RuntimeError("perturbation has a nonnegative margin; cannot scale to target")
    s = (margin_target - np.pi * base) / m_g
    field = ScalarField.constant(base, lmax) + s * g.field
    return GeneratingDensity(field, n_lat, n_lon,
                             meta={"kind": "harmonic", "lmax": lmax, "seed": seed,
                                   "margin_target": margin_target})


def brute_force_radius(h, flag: Flag, n_quad: int = 4096) -> float:
    """Projection curvature radius by a dense trapezoid over the great circle."""
    e1, e2, _ = canonical_frame(flag.omega)
    phi = np.linspace(0.0, TWO_PI, n_quad, endpoint=False)
    pts = np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2)
    vals = np.asarray(h(pts))
    return float(2.0 * np.sum(np.cos(flag.psi - phi) ** 2 * vals) * (TWO_PI / n_quad))


def brute_force_consistency_rhs(Fbar, flag: Flag, n_nu: int = 512, n_phi: int = 1024) -> float:
    """Dense nested quadrature of the consistency right-hand side, phi first."""
    x, w = np.polynomial.legendre.leggauss(n_nu)
    nu = (x + 1.0) * np.pi / 4.0
    w = w * np.pi / 4.0
    e1, e2, om = canonical_frame(flag.omega)
    phi = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    kern = np.cos(2.0 * (phi - flag.psi))
    circle = np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2)
    total = 0.0
    for start in range(0, n_nu, 32):
        block = nu[start:start + 32]
        pts = (np.cos(block)[:, None, None] * circle[None]
               + np.sin(block)[:, None, None] * om)
        inner = np.asarray(Fbar(pts)) @ kern * (TWO_PI / n_phi)
        total += float(np.sum(w[start:start + 32] * inner / np.cos(block)))
    return float(0.5 * Fbar(om) - total / TWO_PI)


def brute_force_forward_coeffs(h, omega, n_psi: int = 64, n_phi: int = 2048) -> np.ndarray:
    """``(a0, a2, b2)`` at ``omega`` by a dense psi x phi double quadrature of the radius."""
    e1, e2, _ = canonical_frame(as_direction(omega))
    phi = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    vals = np.asarray(h(np.outer(np.cos(phi), e1) + np.outer(np.sin(phi), e2)))
    psi = np.linspace(0.0, TWO_PI, n_psi, endpoint=False)
    R = 2.0 * (np.cos(psi[:, None] - phi[None, :]) ** 2 @ vals) * (TWO_PI / n_phi)
    dpsi = TWO_PI / n_psi
    return np.array([np.sum(R) * dpsi / TWO_PI,
                     np.sum(R * np.cos(2 * psi)) * dpsi / np.pi,
                     np.sum(R * np.sin(2 * psi)) * dpsi / np.pi])


def brute_force_support(h, xi, n: int = 2000, n_az: int = 256) -> float:
    """``int |<xi, Omega>| h dOmega`` by a midpoint rule in ``t = <xi, Omega>``.

    Uses its own orthonormal completion of ``xi``; the kink at ``t = 0`` sits
    on a cell boundary because ``n`` is even.
    """
    xi = as_direction(xi)
    a = np.array([1.0, 0.0, 0.0]) if abs(xi[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(xi, a)
    u /= np.linalg.norm(u)
    v = np.cross(xi, u)
    t = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    az = (np.arange(n_az) + 0.5) * (TWO_PI / n_az)
    s = np.sqrt(1.0 - t * t)
    total = 0.0
    for start in range(0, n, 200):
        tb, sb = t[start:start + 200], s[start:start + 200]
        pts = (sb[:, None, None] * (np.cos(az)[None, :, None] * u + np.sin(az)[None, :, None] * v)
               + tb[:, None, None] * xi)
        total += float(np.sum(np.abs(tb)[:, None] * np.asarray(h(pts))))
    return total * (2.0 / n) * (TWO_PI / n_az)


def brute_force_margin(h, nodes, n_psi: int = 720, n_phi: int = 2048, refine: int = 16) -> float:
    """Dense ``(omega, psi)`` scan of the Lindquist integral over ``nodes``.

    The psi-scan minimum of the best ``refine`` nodes is polished with a
    bounded scalar minimizer on the same brute-force integral.
    """
    nodes = np.atleast_2d(as_direction(nodes))
    e1, e2, _ = canonical_frame(nodes)
    phi = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    dphi = TWO_PI / n_phi
    vals = np.stack([np.asarray(h(np.cos(p) * e1 + np.sin(p) * e2)) for p in phi], axis=1)
    psi = np.linspace(0.0, np.pi, n_psi, endpoint=False)
    scan = vals @ (np.cos(psi[None, :] - phi[:, None]) ** 2) * dphi
    best_psi = psi[np.argmin(scan, axis=1)]
    node_min = scan.min(axis=1)
    best = float(node_min.min())
    step = np.pi / n_psi
    for k in np.argsort(node_min)[:refine]:
        row = vals[k]
        res = minimize_scalar(lambda s: float(np.sum(np.cos(s - phi) ** 2 * row) * dphi),
                              bounds=(best_psi[k] - step, best_psi[k] + step),
                              method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best
