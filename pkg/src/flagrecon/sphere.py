"""Coordinate-free geometry on the unit sphere.

Directions are plain ``numpy`` arrays with a trailing axis of length 3; every
function here broadcasts over leading axes.  Pole-relative coordinates use
latitude ``nu`` in [-pi/2, pi/2] and longitude ``phi`` in [0, 2pi), with the
longitude origin fixed by :func:`canonical_frame`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import JacobianDomainError

TWO_PI = 2.0 * np.pi
FRAME_CONVENTION = "zcross-v1"
_POLAR_CUTOFF = 1.0 - 1e-9

X_HAT = np.array([1.0, 0.0, 0.0])
Y_HAT = np.array([0.0, 1.0, 0.0])
Z_HAT = np.array([0.0, 0.0, 1.0])


def as_direction(v) -> np.ndarray:
    """Normalize ``v`` (shape ``(..., 3)``) to unit length."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError(f"expected trailing axis of length 3, got shape {v.shape}")
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0.0) or not np.all(np.isfinite(n)):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


class TangentFrame(NamedTuple):
    e1: np.ndarray
    e2: np.ndarray
    pole: np.ndarray


@dataclass(frozen=True)
class Flag:
    """A direction ``omega`` and an angle ``psi`` in its tangent circle."""

    omega: np.ndarray
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "omega", as_direction(self.omega))
        object.__setattr__(self, "psi", float(np.mod(self.psi, TWO_PI)))

    def line(self) -> np.ndarray:
        """Spatial unit vector of the flag's psi direction."""
        return great_circle_point(self.omega, self.psi)


def canonical_frame(omega) -> TangentFrame:
    """Deterministic right-handed tangent frame at ``omega``.

    ``e1 = normalize(z x omega)`` away from the poles; near them, ``x``
    with its ``omega`` component removed (exactly ``x`` at ``+-z``);
    ``e2 = omega x e1``.
    """
    omega = np.asarray(omega, dtype=float)
    x, y, z = omega[..., 0], omega[..., 1], omega[..., 2]
    polar = np.abs(z) > _POLAR_CUTOFF
    rho = np.hypot(x, y)
    safe = np.where(polar, 1.0, rho)
    # polar branch: x_hat - x * omega, normalized
    px, py, pz = 1.0 - x * x, -x * y, -x * z
    pn = np.where(polar, np.sqrt(px * px + py * py + pz * pz), 1.0)
    e1 = np.stack([np.where(polar, px / pn, -y / safe),
                   np.where(polar, py / pn, x / safe),
                   np.where(polar, pz / pn, 0.0)], axis=-1)
    e2 = np.cross(omega, e1)
    return TangentFrame(e1, e2, omega)


def point_from_pole_coords(pole, nu, phi) -> np.ndarray:
    """Point with latitude ``nu`` and longitude ``phi`` relative to ``pole``."""
    pole = np.asarray(pole, dtype=float)
    nu = np.asarray(nu, dtype=float)
    phi = np.asarray(phi, dtype=float)
    e1, e2, _ = canonical_frame(pole)
    c = np.cos(nu)[..., None]
    p = (c * np.cos(phi)[..., None] * e1 + c * np.sin(phi)[..., None] * e2
         + np.sin(nu)[..., None] * pole)
    at_pole = (nu == np.pi / 2)[..., None]
    at_anti = (nu == -np.pi / 2)[..., None]
    p = np.where(at_pole, pole, p)
    return np.where(at_anti, -pole, p)


def pole_coords(pole, p) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`point_from_pole_coords`; longitude is 0 at the poles."""
    pole = np.asarray(pole, dtype=float)
    p = np.asarray(p, dtype=float)
    e1, e2, _ = canonical_frame(pole)
    a = np.sum(p * e1, axis=-1)
    b = np.sum(p * e2, axis=-1)
    c = np.sum(p * pole, axis=-1)
    nu = np.arctan2(c, np.hypot(a, b))
    phi = np.mod(np.arctan2(b, a), TWO_PI)
    phi = np.where(np.abs(np.abs(nu) - np.pi / 2) <= 1e-12, 0.0, phi)
    return nu, phi


def great_circle_point(omega, phi) -> np.ndarray:
    """Point of the great circle with pole ``omega`` at longitude ``phi``."""
    e1, e2, _ = canonical_frame(omega)
    phi = np.asarray(phi, dtype=float)[..., None]
    return np.cos(phi) * e1 + np.sin(phi) * e2


def transport_angle(q, p) -> np.ndarray:
    """Angle of canonical ``e1(q)`` parallel-transported to ``p``, in ``p``'s frame.

    Transport runs along the shorter great-circle arc; ``q`` and ``p`` must
    not be antipodal.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    e1q = canonical_frame(q).e1
    e1p, e2p, _ = canonical_frame(p)
    c = np.sum(q * p, axis=-1, keepdims=True)
    v = e1q - np.sum(e1q * p, axis=-1, keepdims=True) / (1.0 + c) * (q + p)
    return np.arctan2(np.sum(v * e2p, axis=-1), np.sum(v * e1p, axis=-1))


def _half_circle_point(pole, u, tau, center_phi):
    # point of S(u, center) at angle tau; tau in (-pi/2, pi/2) is one half
    center = great_circle_point(pole, center_phi)
    tangent = great_circle_point(pole, np.asarray(center_phi) + np.pi / 2)
    tau = np.asarray(tau)[..., None]
    return (np.sin(u) * center
            + np.cos(u) * (np.cos(tau) * tangent + np.sin(tau) * pole))


def jacobian_weight(u: float, nu) -> np.ndarray:
    """``cos nu / sqrt(cos^2 u - sin^2 nu)``, the claimed area ratio."""
    nu = np.asarray(nu, dtype=float)
    return np.cos(nu) / np.sqrt(np.cos(u) ** 2 - np.sin(nu) ** 2)


def jacobian_identity_residual(u: float, n_nu: int = 64, n_phi: int = 128,
                               pole=None) -> float:
    """Max relative mismatch between the two area elements of the half-circle map.

    A uniform grid of ``n_nu`` half-circle angles times ``n_phi`` circle
    centres is pushed through the geometry of S(u, .) to latitude/longitude
    about ``pole``.  For every cell, the image area weighted by the claimed
    Jacobian at the image of the cell centre is compared with the cell's
    own area.  The residual is second order in the grid spacing.
    """
    if not 0.0 < u < np.pi / 2:
        raise ValueError("u must lie in (0, pi/2)")
    pole = Z_HAT if pole is None else as_direction(pole)
    tau_e = np.linspace(-np.pi / 2, np.pi / 2, n_nu + 1)
    tau_m = 0.5 * (tau_e[1:] + tau_e[:-1])
    ctr_e = TWO_PI * np.arange(n_phi + 1) / n_phi
    ctr_m = 0.5 * (ctr_e[1:] + ctr_e[:-1])

    T, C = np.meshgrid(tau_m, ctr_m, indexing="ij")
    nu_c, phi_c = pole_coords(pole, _half_circle_point(pole, u, T, C))
    rim = np.cos(u) ** 2 - np.sin(nu_c) ** 2
    if np.any(rim <= 1e-14):
        raise JacobianDomainError(
            f"cell centre within 1e-14 of the singular rim (min {rim.min():.3e})")

    corners = []
    for dt, dc in ((0, 0), (0, 1), (1, 1), (1, 0)):
        Tk, Ck = np.meshgrid(tau_e[dt:n_nu + dt], ctr_e[dc:n_phi + dc], indexing="ij")
        nu_k, phi_k = pole_coords(pole, _half_circle_point(pole, u, Tk, Ck))
        phi_k = phi_c + np.angle(np.exp(1j * (phi_k - phi_c)))
        corners.append((nu_k, phi_k))
    area = 0.0
    for k in range(4):
        (n0, f0), (n1, f1) = corners[k], corners[(k + 1) % 4]
        area = area + (n0 * f1 - n1 * f0)
    area = 0.5 * np.abs(area)

    cell = (tau_e[1] - tau_e[0]) * (ctr_e[1] - ctr_e[0])
    ratio = jacobian_weight(u, nu_c) * area / cell
    return float(np.max(np.abs(ratio - 1.0)))


def jacobian_two_sided_integral(u: float, g: Callable[[np.ndarray], np.ndarray],
                                n_nu: int = 128, n_phi: int = 256,
                                pole=None) -> tuple[float, float]:
    """Integrate ``g`` over one half-circle family in both parametrizations.

    Returns ``(int g dtau dcentre, int g * J dnu dphi)``.  The latitude side
    uses ``nu = nu_max sin s`` so the rim singularity is absorbed.
    """
    pole = Z_HAT if pole is None else as_direction(pole)
    x, w = np.polynomial.legendre.leggauss(n_nu)
    phi = TWO_PI * np.arange(n_phi) / n_phi
    dphi = TWO_PI / n_phi

    tau = x * np.pi / 2
    T, C = np.meshgrid(tau, phi, indexing="ij")
    lhs = np.sum(w[:, None] * np.pi / 2 * g(_half_circle_point(pole, u, T, C))) * dphi

    nu_max = np.pi / 2 - u
    s = x * np.pi / 2
    nu = nu_max * np.sin(s)
    # J(nu) * dnu/ds, written without the 0/0 at s = +-pi/2
    dnu = nu_max * np.cos(s)
    jac = np.cos(nu) * dnu / np.sqrt((np.cos(u) - np.sin(nu)) * (np.cos(u) + np.sin(nu)))
    N, F = np.meshgrid(nu, phi, indexing="ij")
    vals = g(point_from_pole_coords(pole, N, F))
    rhs = np.sum((w * np.pi / 2 * jac)[:, None] * vals) * dphi
    return float(lhs), float(rhs)
