"""Mollifier scaling, stencil construction, and deposition contracts."""

import numpy as np
import pytest
from scipy.integrate import dblquad

import aggrsim as ag
from aggrsim.smoothing import _profile_norm, PROFILES


def test_base_kernel_has_unit_mass_quadrature():
    # independent 2d quadrature of the normalized bump over its support
    c = _profile_norm("bump", 2)
    total, err = dblquad(
        lambda y, x: c * float(PROFILES["bump"](np.hypot(x, y))),
        -1.0, 1.0, lambda x: -1.0, lambda x: 1.0, epsabs=1e-10,
    )
    assert total == pytest.approx(1.0, abs=1e-8)


def test_scaled_kernel_nonnegative_and_support():
    spec = ag.MollifierSpec("bump", 2, 0.9, 100)
    r = spec.support_radius
    assert r == pytest.approx(100 ** (-0.9 / 2))
    radii = np.linspace(0, 2 * r, 400)
    vals = spec.evaluate(radii)
    assert np.all(vals >= 0)
    assert np.all(vals[radii >= r] == 0)
    assert np.all(vals[radii < 0.99 * r] > 0)


def test_scaling_identity_at_n1(small_geometry):
    # n=1: the scaled kernel equals the base kernel sampled on the grid
    spec1 = ag.MollifierSpec("bump", 2, 0.5, 1)
    assert spec1.support_radius == 1.0
    assert spec1.height_scale == 1.0
    radii = np.array([0.0, 0.3, 0.7, 0.99])
    base = _profile_norm("bump", 2) * PROFILES["bump"](radii)
    assert np.allclose(spec1.evaluate(radii), base, rtol=1e-14)


def test_support_radius_shrink_factor():
    # d=2, beta=0.9, n=100: radius shrinks by 100^0.45 relative to the base kernel
    spec = ag.MollifierSpec("bump", 2, 0.9, 100)
    assert 1.0 / spec.support_radius == pytest.approx(100**0.45, rel=1e-12)
    assert 100**0.45 == pytest.approx(7.943282347242816, rel=1e-12)


def test_stencil_mass_exact():
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (64, 64))
    for n in (1, 10, 100):
        spec = ag.MollifierSpec("bump", 2, 0.5, n)
        st = ag.build_scaled_kernel(spec, geo)
        assert st.weights.sum() * geo.cell_volume == 1.0


def test_unresolvable_kernel_raises():
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (16, 16))  # dx = 0.125
    spec = ag.MollifierSpec("bump", 2, 0.9, 100)  # support radius ~ 0.126
    with pytest.raises(ag.UnresolvableKernel):
        ag.build_scaled_kernel(spec, geo)


def test_deposit_single_particle_at_cell_center():
    # n=1 keeps the base kernel's unit support radius, so pad generously
    geo = ag.GridGeometry((0.0, 0.0), (4.0, 4.0), (128, 128))
    spec = ag.MollifierSpec("bump", 2, 0.5, 1)
    st = ag.build_scaled_kernel(spec, geo)
    center = np.array([[geo.axis_centers(0)[64], geo.axis_centers(1)[64]]])
    u = ag.deposit_density(center, st, geo)
    h = st.halfwidth
    window = u.values[64 - h[0] : 64 + h[0] + 1, 64 - h[1] : 64 + h[1] + 1]
    assert np.array_equal(window, st.weights)
    outside = u.values.sum() - window.sum()
    assert outside == 0.0


def test_deposit_two_coincident_particles_match_single():
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (64, 64))
    spec = ag.MollifierSpec("bump", 2, 0.5, 2)
    st = ag.build_scaled_kernel(spec, geo)
    p = np.array([[0.9371, 1.0212]])
    u1 = ag.deposit_density(p, st, geo)
    u2 = ag.deposit_density(np.vstack([p, p]), st, geo)
    assert np.array_equal(u1.values, u2.values)


def test_deposit_mass_unit(rng):
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (128, 128))
    spec = ag.MollifierSpec("bump", 2, 0.5, 100)
    st = ag.build_scaled_kernel(spec, geo)
    pos = 0.5 + rng.random((100, 2))
    u = ag.deposit_density(pos, st, geo)
    assert abs(u.mass() - 1.0) < 1e-12
    assert u.values.min() >= 0.0


def test_deposit_out_of_domain_names_particle():
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (64, 64))
    spec = ag.MollifierSpec("bump", 2, 0.5, 4)
    st = ag.build_scaled_kernel(spec, geo)
    pos = np.array([[1.0, 1.0], [1.2, 0.9], [0.01, 1.0], [1.5, 1.5]])
    with pytest.raises(ag.ParticleOutOfDomain) as exc:
        ag.deposit_density(pos, st, geo)
    assert exc.value.index == 2


def test_translation_equivariance_bit_exact():
    # dyadic spacing and positions reconstructed from integers: shifting every
    # particle by whole cells must shift the field bit-exactly
    geo = ag.GridGeometry((0.0, 0.0), (4.0, 4.0), (128, 128))  # dx = 0.03125
    dx = geo.spacing[0]
    spec = ag.MollifierSpec("bump", 2, 0.5, 20)
    st = ag.build_scaled_kernel(spec, geo)
    rng = np.random.default_rng(5)
    cells_idx = rng.integers(40, 60, size=(20, 2))
    frac = rng.integers(0, 16, size=(20, 2)) / 16.0
    pos = (cells_idx + frac) * dx
    shift = np.array([7, -5])
    pos_shifted = (cells_idx + shift + frac) * dx
    u = ag.deposit_density(pos, st, geo)
    u2 = ag.deposit_density(pos_shifted, st, geo)
    assert np.array_equal(np.roll(u.values, shift, axis=(0, 1)), u2.values)


def test_l2_norm_scaling_law_slope():
    # ||W_n||_L2^2 grows like n^beta: log-log slope within 0.05 of beta
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (256, 256))
    beta = 0.5
    ns = [10, 100, 1000]
    sq_norms = []
    for n in ns:
        st = ag.build_scaled_kernel(ag.MollifierSpec("bump", 2, beta, n), geo)
        vals = np.zeros(geo.cells)
        vals[: st.weights.shape[0], : st.weights.shape[1]] = st.weights
        sq_norms.append(ag.l2_norm(ag.ScalarField(geo, vals)) ** 2)
    slope = np.polyfit(np.log(ns), np.log(sq_norms), 1)[0]
    assert abs(slope - beta) < 0.05


def test_mollifier_spec_validation():
    with pytest.raises(ValueError):
        ag.MollifierSpec("bump", 2, 1.0, 10)  # beta not in (0,1)
    with pytest.raises(ValueError):
        ag.MollifierSpec("nope", 2, 0.5, 10)
    with pytest.raises(ValueError):
        ag.MollifierSpec("bump", 2, 0.5, 0)


def test_wendland_profile_deposits_unit_mass(rng):
    geo = ag.GridGeometry((0.0, 0.0), (2.0, 2.0), (64, 64))
    spec = ag.MollifierSpec("wendland_c2", 2, 0.5, 10)
    st = ag.build_scaled_kernel(spec, geo)
    u = ag.deposit_density(0.7 + 0.6 * rng.random((10, 2)), st, geo)
    assert abs(u.mass() - 1.0) < 1e-12
