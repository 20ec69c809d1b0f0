"""Even band-limited functions on the sphere.

Real, orthonormal spherical harmonics without the Condon-Shortley phase::

    Y_l0   = Q_l0(z)
    Y_lm   = sqrt(2) Q_lm(z) Re (x + iy)^m      (m > 0)
    Y_l,-m = sqrt(2) Q_lm(z) Im (x + iy)^m

where ``Q_lm = Pbar_lm / sin^m(theta)`` is a polynomial in ``z``, so the
basis is evaluated from Cartesian components with no pole singularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NonOrthogonal, SymmetryViolation
from .sphere import TWO_PI, as_direction

TOL_SYM = 1e-6
_EPS_ENERGY = 1e-300


def harmonic_index(lmax: int, even_only: bool = True) -> list[tuple[int, int]]:
    """Ordered ``(l, m)`` pairs, ``m`` running ``-l..l`` within each degree."""
    step = 2 if even_only else 1
    return [(l, m) for l in range(0, lmax + 1, step) for m in range(-l, l + 1)]


def real_harmonics(points, lmax: int, even_only: bool = True) -> np.ndarray:
    """Basis matrix ``Y[..., k]`` over :func:`harmonic_index` order."""
    p = np.asarray(points, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    shape = z.shape

    # Q[l][m] for 0 <= m <= l
    Q = [[None] * (l + 1) for l in range(lmax + 1)]
    qmm = np.full(shape, np.sqrt(1.0 / (4.0 * np.pi)))
    for m in range(lmax + 1):
        if m > 0:
            qmm = qmm * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
        Q[m][m] = qmm
        if m + 1 <= lmax:
            Q[m + 1][m] = np.sqrt(2.0 * m + 3.0) * z * qmm
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            Q[l][m] = a * (z * Q[l - 1][m] - b * Q[l - 2][m])

    re = [np.ones(shape)]
    im = [np.zeros(shape)]
    for m in range(1, lmax + 1):
        re.append(re[-1] * x - im[-1] * y)
        im.append(re[-2] * y + im[-1] * x)

    cols = []
    root2 = np.sqrt(2.0)
    for l, m in harmonic_index(lmax, even_only):
        if m == 0:
            cols.append(Q[l][0])
        elif m > 0:
            cols.append(root2 * Q[l][m] * re[m])
        else:
            cols.append(root2 * Q[l][-m] * im[-m])
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre latitudes times uniform longitudes.

    Rings are ordered north to south; node ``k = i * n_lon + j`` sits on ring
    ``i`` at longitude ``2 pi j / n_lon``.
    """

    n_lat: int
    n_lon: int

    def __post_init__(self):
        if self.n_lat < 1 or self.n_lon < 1:
            raise ValueError("grid sizes must be positive")

    @cached_property
    def cos_colat(self) -> np.ndarray:
        x, _ = np.polynomial.legendre.leggauss(self.n_lat)
        return x[::-1].copy()

    @cached_property
    def colat(self) -> np.ndarray:
        return np.arccos(self.cos_colat)

    @cached_property
    def ring_weights(self) -> np.ndarray:
        _, w = np.polynomial.legendre.leggauss(self.n_lat)
        return w[::-1] * TWO_PI / self.n_lon

    @cached_property
    def lon(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_lon) / self.n_lon

    @cached_property
    def nodes(self) -> np.ndarray:
        st = np.sin(self.colat)[:, None]
        pts = np.stack([st * np.cos(self.lon)[None, :],
                        st * np.sin(self.lon)[None, :],
                        np.broadcast_to(self.cos_colat[:, None], (self.n_lat, self.n_lon))],
                       axis=-1)
        return pts.reshape(-1, 3)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self.ring_weights, self.n_lon)

    @property
    def size(self) -> int:
        return self.n_lat * self.n_lon

    def antipode_index(self) -> np.ndarray:
        """Index of the node at ``-nodes[k]`` (needs even ``n_lon``)."""
        if self.n_lon % 2:
            raise ValueError("antipodal pairing needs an even n_lon")
        i, j = np.divmod(np.arange(self.size), self.n_lon)
        return (self.n_lat - 1 - i) * self.n_lon + (j + self.n_lon // 2) % self.n_lon

    def max_lmax(self) -> int:
        """Largest degree the grid analyzes exactly."""
        return min(self.n_lat - 1, (self.n_lon - 1) // 2)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Even function on the sphere stored as real harmonic coefficients."""

    lmax: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.lmax < 0 or self.lmax % 2:
            raise ValueError("lmax must be a non-negative even integer")
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        n = (self.lmax + 1) * (self.lmax + 2) // 2
        if c.size != n:
            raise ValueError(f"expected {n} coefficients for lmax={self.lmax}, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, value: float, lmax: int = 0) -> "ScalarField":
        c = np.zeros((lmax + 1) * (lmax + 2) // 2)
        c[0] = value * np.sqrt(4.0 * np.pi)
        return cls(lmax, c)

    @classmethod
    def from_dict(cls, lmax: int, terms: dict[tuple[int, int], float]) -> "ScalarField":
        index = {lm: k for k, lm in enumerate(harmonic_index(lmax))}
        c = np.zeros(len(index))
        for (l, m), v in terms.items():
            if l % 2:
                raise SymmetryViolation(f"odd degree l={l} cannot be stored")
            c[index[(l, m)]] = v
        return cls(lmax, c)

    def coeff(self, l: int, m: int) -> float:
        if l % 2 or l > self.lmax or abs(m) > l:
            return 0.0
        return float(self.coeffs[l * (l - 1) // 2 + l + m])

    def terms(self):
        return zip(harmonic_index(self.lmax), self.coeffs)

    def __call__(self, p) -> np.ndarray:
        return evaluate(self, p)

    @cached_property
    def _order_polys(self) -> list[tuple[np.ndarray, np.ndarray]]:
        # per order m: z-polynomials multiplying Re and Im of (x + iy)^m
        L = self.lmax
        P = np.polynomial.Polynomial
        out = []
        qmm = P([np.sqrt(1.0 / (4.0 * np.pi))])
        for m in range(L + 1):
            if m > 0:
                qmm = qmm * np.sqrt((2.0 * m + 1.0) / (2.0 * m))
            q0, q1 = None, qmm
            cos_poly, sin_poly = P([0.0]), P([0.0])
            for l in range(m, L + 1):
                if l == m + 1:
                    q0, q1 = q1, np.sqrt(2.0 * m + 3.0) * P([0.0, 1.0]) * q1
                elif l > m + 1:
                    a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                    b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                    q0, q1 = q1, a * (P([0.0, 1.0]) * q1 - b * q0)
                if l % 2:
                    continue
                if m == 0:
                    cos_poly = cos_poly + self.coeff(l, 0) * q1
                else:
                    cos_poly = cos_poly + np.sqrt(2.0) * self.coeff(l, m) * q1
                    sin_poly = sin_poly + np.sqrt(2.0) * self.coeff(l, -m) * q1
            out.append((cos_poly.coef, sin_poly.coef))
        return out

    def __add__(self, other: "ScalarField") -> "ScalarField":
        L = max(self.lmax, other.lmax)
        return ScalarField(L, self.padded(L) + other.padded(L))

    def __mul__(self, k: float) -> "ScalarField":
        return ScalarField(self.lmax, k * self.coeffs)

    __rmul__ = __mul__

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self + (-1.0) * other

    def padded(self, lmax: int) -> np.ndarray:
        out = np.zeros((lmax + 1) * (lmax + 2) // 2)
        n = min(out.size, self.coeffs.size)
        out[:n] = self.coeffs[:n]
        return out

    def rotated_z(self, alpha) -> np.ndarray:
        """Coefficients of ``p -> f(R_z(alpha) p)``, one column per ``alpha``."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        out = np.empty((self.coeffs.size, alpha.size))
        for l in range(0, self.lmax + 1, 2):
            base = l * (l - 1) // 2 + l
            out[base] = self.coeffs[base]
            for m in range(1, l + 1):
                c, s = np.cos(m * alpha), np.sin(m * alpha)
                cp, cm = self.coeffs[base + m], self.coeffs[base - m]
                out[base + m] = c * cp + s * cm
                out[base - m] = -s * cp + c * cm
        return out


def analyze(values, grid: SphereGrid, lmax: int, tol_sym: float = TOL_SYM) -> ScalarField:
    """Project nodal values onto even harmonics up to ``lmax``.

    Odd degrees up to ``lmax + 1`` are measured too; if their energy exceeds
    ``tol_sym`` times the even energy, :class:`SymmetryViolation` is raised.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size != grid.size:
        raise ValueError(f"{v.size} values for a grid of {grid.size} nodes")
    if grid.n_lat < lmax + 1 or grid.n_lon < 2 * lmax + 1:
        raise ValueError(f"grid {grid.n_lat}x{grid.n_lon} too coarse for lmax={lmax}")
    Lfull = lmax + 1 if (lmax + 1) <= grid.max_lmax() else lmax
    Y = real_harmonics(grid.nodes, Lfull, even_only=False)
    proj = Y.T @ (grid.weights * v)
    degrees = np.array([l for l, _ in harmonic_index(Lfull, even_only=False)])
    odd = degrees % 2 == 1
    even_energy = float(np.sum(proj[~odd] ** 2))
    odd_energy = float(np.sum(proj[odd] ** 2))
    if odd_energy > tol_sym * (even_energy + _EPS_ENERGY):
        raise SymmetryViolation(
            f"odd-degree energy {odd_energy:.3e} exceeds {tol_sym:g} x even energy {even_energy:.3e}")
    keep = (~odd) & (degrees <= lmax)
    return ScalarField(lmax, proj[keep])


def synthesize(f: ScalarField, grid: SphereGrid) -> np.ndarray:
    return evaluate(f, grid.nodes)


_HORNER_LMAX = 12


def evaluate(f: ScalarField, p) -> np.ndarray:
    """Harmonic synthesis at direction(s) ``p``; returns a float for one point.

    Up to degree 12 each order's z-polynomial is evaluated by Horner's rule;
    above that the (slower, better conditioned) basis recurrence is used.
    """
    p = np.asarray(p, dtype=float)
    if f.lmax > _HORNER_LMAX:
        out = real_harmonics(p, f.lmax) @ f.coeffs
        return float(out) if out.ndim == 0 else out
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    polyval = np.polynomial.polynomial.polyval
    polys = f._order_polys
    out = polyval(z, polys[0][0]) * np.ones_like(z)
    re, im = np.ones_like(z), np.zeros_like(z)
    for m in range(1, f.lmax + 1):
        re, im = re * x - im * y, re * y + im * x
        cp, sp = polys[m]
        out = out + re * polyval(z, cp) + im * polyval(z, sp)
    return float(out) if out.ndim == 0 else out


def geodesic_derivative(f: ScalarField, start, toward, h_fd: float = 1e-4) -> np.ndarray:
    """``d/du f(cos u * start + sin u * toward)`` at ``u = 0``.

    Central difference with step ``h_fd``; truncation error is
    ``O(h_fd^2 lmax^3 |f|)``.
    """
    start = as_direction(start)
    toward = as_direction(toward)
    if np.any(np.abs(np.sum(start * toward, axis=-1)) > 1e-9):
        raise NonOrthogonal("`start` and `toward` must be orthogonal within 1e-9")
    plus = np.cos(h_fd) * start + np.sin(h_fd) * toward
    minus = np.cos(h_fd) * start - np.sin(h_fd) * toward
    return (evaluate(f, plus) - evaluate(f, minus)) / (2.0 * h_fd)
