import numpy as np
import pytest

from conftest import random_directions
from flagrecon.oracle import (brute_force_consistency_rhs, brute_force_radius, make_harmonic,
                              make_sphere)
from flagrecon.scalar_field import ScalarField
from flagrecon.sphere import TWO_PI, Flag
from flagrecon.transforms import forward_field, lindquist_margin


def test_make_sphere(rng):
    h, F, H = make_sphere(1.0)
    assert np.allclose(h(h.grid.nodes), 1 / TWO_PI, atol=1e-15)
    assert np.all(F.a0 == 1.0)
    Ff = forward_field(h)
    assert np.max(np.abs(Ff.a0 - 1)) < 1e-13 and np.max(np.abs(Ff.a2)) < 1e-13
    _, _, H2 = make_sphere(2.0)
    assert np.max(np.abs(H2(random_directions(rng, 20)) - 2.0)) < 1e-4
    with pytest.raises(ValueError):
        make_sphere(0.0)


def test_make_harmonic_hits_margin():
    for seed in range(3):
        h = make_harmonic(4, seed, 0.1)
        assert abs(lindquist_margin(h) - 0.1) <= 1e-9
        assert h.meta == {"kind": "harmonic", "lmax": 4, "seed": seed, "margin_target": 0.1}


def test_make_harmonic_deterministic():
    a, b = make_harmonic(6, 7, 0.2), make_harmonic(6, 7, 0.2)
    assert np.array_equal(a.field.coeffs, b.field.coeffs)
    assert not np.array_equal(a.field.coeffs, make_harmonic(6, 8, 0.2).field.coeffs)


def test_make_harmonic_negative_target_rejected_as_body():
    h = make_harmonic(4, 0, -0.05)
    assert not h.is_body
    assert lindquist_margin(h) == pytest.approx(-0.05, abs=1e-9)


def test_make_harmonic_guards():
    for lmax in (0, 3):
        with pytest.raises(ValueError):
            make_harmonic(lmax, 0, 0.1)
    with pytest.raises(ValueError):
        make_harmonic(4, 0, 0.6)


def test_brute_force_radius(rng, harmonic_densities):
    h, _, _ = make_sphere(1.3)
    assert brute_force_radius(h, Flag(rng.normal(size=3), 0.4)) == pytest.approx(1.3, abs=1e-13)
    hh = harmonic_densities[0]
    flag = Flag(rng.normal(size=3), 1.1)
    assert abs(brute_force_radius(hh, flag, 4096) - brute_force_radius(hh, flag, 8192)) < 1e-12


def test_brute_force_consistency_rhs():
    flag = Flag(np.array([0.2, 0.1, -0.9]), 2.0)
    assert brute_force_consistency_rhs(ScalarField.constant(2.0), flag) == pytest.approx(1.0, abs=1e-13)


def test_brute_force_consistency_rhs_refinement(harmonic_fields):
    from flagrecon.flag_field import mean_over_psi
    Fbar = mean_over_psi(harmonic_fields[0])
    flag = Flag(np.array([0.5, -0.1, 0.3]), 0.3)
    a = brute_force_consistency_rhs(Fbar, flag)
    b = brute_force_consistency_rhs(Fbar, flag, 1024, 2048)
    assert abs(a - b) < 1e-8
