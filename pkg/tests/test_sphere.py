import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_directions
from flagrecon.errors import JacobianDomainError
from flagrecon.sphere import (TWO_PI, X_HAT, Y_HAT, Z_HAT, Flag, as_direction, canonical_frame,
                              great_circle_point, jacobian_identity_residual,
                              jacobian_two_sided_integral, point_from_pole_coords, pole_coords,
                              transport_angle)

vectors = st.lists(st.floats(-1, 1, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


def test_as_direction_normalizes_and_rejects_zero():
    d = as_direction([3.0, 0.0, 4.0])
    assert abs(np.linalg.norm(d) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        as_direction([0.0, 0.0, 0.0])


def test_flag_reduces_psi():
    f = Flag(np.array([0.0, 0.0, 2.0]), 7.0)
    assert 0.0 <= f.psi < TWO_PI
    assert abs(f.psi - (7.0 - TWO_PI)) < 1e-15
    assert np.allclose(f.omega, Z_HAT)


def test_canonical_frame_pole_fallback():
    e1, e2, om = canonical_frame(Z_HAT)
    assert np.array_equal(e1, X_HAT)
    assert np.allclose(e2, Y_HAT, atol=1e-15)


def test_canonical_frame_equator():
    e1, e2, _ = canonical_frame(X_HAT)
    assert np.allclose(e1, Y_HAT, atol=1e-15)
    assert np.allclose(e2, Z_HAT, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_canonical_frame_right_handed_orthonormal(v):
    e1, e2, om = canonical_frame(as_direction(np.array(v)))
    M = np.stack([e1, e2, om])
    assert np.max(np.abs(M @ M.T - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(M) - 1.0) < 1e-12


def test_canonical_frame_deterministic(rng):
    om = random_directions(rng, 50)
    a, b = canonical_frame(om), canonical_frame(om.copy())
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    # vectorized and one-at-a-time agree bitwise
    single = np.array([canonical_frame(o).e1 for o in om])
    assert np.array_equal(single, a.e1)


def test_point_from_pole_coords_examples():
    assert np.array_equal(point_from_pole_coords(Z_HAT, np.pi / 2, 1.234), Z_HAT)
    assert np.allclose(point_from_pole_coords(Z_HAT, 0.0, 0.0), X_HAT, atol=1e-15)


def test_point_from_pole_coords_latitude_identity(rng):
    poles = random_directions(rng, 200)
    nu = rng.uniform(-np.pi / 2, np.pi / 2, 200)
    phi = rng.uniform(0, TWO_PI, 200)
    p = point_from_pole_coords(poles, nu, phi)
    assert np.max(np.abs(np.sum(p * poles, axis=1) - np.sin(nu))) < 1e-12
    assert np.max(np.abs(np.linalg.norm(p, axis=1) - 1)) < 1e-12


def test_pole_coords_examples():
    nu, phi = pole_coords(Z_HAT, Z_HAT)
    assert nu == pytest.approx(np.pi / 2) and phi == 0.0
    nu, phi = pole_coords(Z_HAT, Y_HAT)
    assert nu == pytest.approx(0.0, abs=1e-15) and phi == pytest.approx(np.pi / 2)


def test_pole_coords_roundtrip(rng):
    pole = as_direction(rng.normal(size=3))
    p = random_directions(rng, 1000)
    nu, phi = pole_coords(pole, p)
    assert np.max(np.abs(point_from_pole_coords(pole, nu, phi) - p)) < 1e-10


def test_antipodal_pole_flips_latitude(rng):
    pole = as_direction(rng.normal(size=3))
    nu, phi = rng.uniform(-1.5, 1.5, 20), rng.uniform(0, TWO_PI, 20)
    p = point_from_pole_coords(-pole, nu, phi)
    nu2, _ = pole_coords(pole, p)
    assert np.max(np.abs(nu2 + nu)) < 1e-12


def test_great_circle_point_examples(rng):
    assert np.allclose(great_circle_point(Z_HAT, 0.0), X_HAT, atol=1e-15)
    om = as_direction(rng.normal(size=3))
    phi = np.linspace(0, TWO_PI, 360, endpoint=False)
    pts = great_circle_point(om, phi)
    assert np.max(np.abs(pts @ om)) < 1e-12
    assert np.allclose(great_circle_point(om, phi + np.pi), -pts, atol=1e-12)
    assert np.allclose(pts, point_from_pole_coords(om, 0.0, phi), atol=1e-15)


def test_transport_angle_identity_and_sign(rng):
    p = random_directions(rng, 20)
    assert np.max(np.abs(transport_angle(p, p))) < 1e-12
    q = as_direction(p + 0.05 * rng.normal(size=p.shape))
    assert np.allclose(transport_angle(q, p), -transport_angle(p, q), atol=1e-12)


def test_jacobian_residual_halves_at_quarter_pi():
    res = [jacobian_identity_residual(np.pi / 4, n, 2 * n) for n in (64, 128, 256)]
    assert res[0] / res[1] >= 2.0 and res[1] / res[2] >= 2.0


@pytest.mark.parametrize("u", [np.pi / 6, np.pi / 4, np.pi / 3])
def test_jacobian_residual_monotone(u):
    res = [jacobian_identity_residual(u, n, 2 * n) for n in (16, 32, 64)]
    assert res[0] > res[1] > res[2]


def test_jacobian_residual_near_rim_is_finite():
    r = jacobian_identity_residual(np.pi / 2 - 0.3, 8, 16)
    assert np.isfinite(r)


def test_jacobian_residual_rejects_rim_and_range():
    with pytest.raises(JacobianDomainError):
        jacobian_identity_residual(np.pi / 2 - 1e-8)
    with pytest.raises(ValueError):
        jacobian_identity_residual(0.0)


def test_jacobian_two_sided_constant():
    lhs, rhs = jacobian_two_sided_integral(np.pi / 4, lambda p: np.ones(p.shape[:-1]), 128, 256)
    # a half circle of half-length pi, swept by 2 pi of centres
    assert lhs == pytest.approx(2 * np.pi ** 2, rel=1e-12)
    assert abs(lhs - rhs) < 1e-6


def test_jacobian_two_sided_tilted_pole(rng):
    pole = as_direction(rng.normal(size=3))
    g = lambda p: np.exp(p[..., 0]) + p[..., 1] ** 2
    lhs, rhs = jacobian_two_sided_integral(np.pi / 3, g, 128, 256, pole=pole)
    assert abs(lhs - rhs) < 1e-8 * abs(lhs)
