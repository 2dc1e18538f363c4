"""Locally-L2 metric, bump test functions, weak residual diagnostics."""

import math
from dataclasses import replace

import numpy as np
import pytest

import aggrsim as ag
from conftest import zero_kernel


@pytest.fixture
def geometry():
    return ag.GridGeometry((-2.5, -2.5), (5.0, 5.0), (100, 100))


def _field(geometry, values):
    return ag.ScalarField(geometry, values)


def test_l2_ball_zero_for_equal_fields(geometry, rng):
    f = _field(geometry, rng.random(geometry.cells))
    assert ag.l2_ball(f, f, 1.0, (0.0, 0.0)) == 0.0


def test_l2_ball_constant_difference_closed_form(geometry):
    c = 0.7
    f = _field(geometry, np.full(geometry.cells, c))
    g = _field(geometry, np.zeros(geometry.cells))
    r = 1.3
    got = ag.l2_ball(f, g, r, (0.0, 0.0))
    want = c * math.sqrt(math.pi) * r
    # one-cell boundary error allowance
    assert abs(got - want) < c * math.sqrt(2 * math.pi * r * max(geometry.spacing))


def test_l2_ball_matches_masked_sum_oracle(geometry, rng):
    f = _field(geometry, rng.random(geometry.cells))
    g = _field(geometry, rng.random(geometry.cells))
    r, center = 1.7, (0.4, -0.3)
    X, Y = geometry.center_mesh()
    mask = (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= r**2
    oracle = math.sqrt((((f.values - g.values) ** 2)[mask]).sum() * geometry.cell_volume)
    assert abs(ag.l2_ball(f, g, r, center) - oracle) < 1e-12


def test_l2_ball_outside_domain(geometry):
    f = _field(geometry, np.zeros(geometry.cells))
    with pytest.raises(ag.BallOutsideDomain):
        ag.l2_ball(f, f, 3.0, (0.0, 0.0))
    with pytest.raises(ag.BallOutsideDomain):
        ag.l2_ball(f, f, 1.0, (2.0, 0.0))


def test_d_l2loc_zero_and_cap(geometry, rng):
    f = _field(geometry, rng.random(geometry.cells))
    assert ag.d_l2loc(f, f, 2, (0.0, 0.0)) == 0.0
    huge = _field(geometry, f.values + 100.0)
    # every capped term saturates at 1: partial sum is 1 - 2^-n_max
    assert ag.d_l2loc(f, huge, 2, (0.0, 0.0)) == pytest.approx(1.0 - 0.25, abs=1e-12)
    assert ag.d_l2loc(f, huge, 2, (0.0, 0.0)) <= 1.0


def test_d_l2loc_metric_axioms_on_samples(geometry, rng):
    fs = [_field(geometry, rng.random(geometry.cells)) for _ in range(3)]
    c = (0.0, 0.0)
    d01 = ag.d_l2loc(fs[0], fs[1], 2, c)
    d10 = ag.d_l2loc(fs[1], fs[0], 2, c)
    assert abs(d01 - d10) < 1e-10
    d02 = ag.d_l2loc(fs[0], fs[2], 2, c)
    d12 = ag.d_l2loc(fs[1], fs[2], 2, c)
    assert d02 <= d01 + d12 + 1e-10


def test_bump_derivatives_match_finite_differences(rng):
    phi = ag.BumpTestFunction((0.3, -0.2), 1.1, amplitude=2.0)
    pts = rng.uniform(-1.5, 1.5, size=(200, 2))
    h = 1e-6
    e0 = np.array([h, 0.0])
    e1 = np.array([0.0, h])
    grad_fd = np.stack(
        [(phi.value(pts + e0) - phi.value(pts - e0)) / (2 * h),
         (phi.value(pts + e1) - phi.value(pts - e1)) / (2 * h)], axis=1)
    assert np.abs(phi.gradient(pts) - grad_fd).max() < 1e-6
    lap_fd = (
        phi.value(pts + e0) + phi.value(pts - e0)
        + phi.value(pts + e1) + phi.value(pts - e1)
        - 4 * phi.value(pts)
    ) / h**2
    assert np.abs(phi.laplacian(pts) - lap_fd).max() < 2e-3


def test_weak_residual_zero_fields(geometry):
    zero_u = [ag.DensityField(geometry, np.zeros(geometry.cells)) for _ in range(3)]
    zero_m = [_field(geometry, np.zeros(geometry.cells)) for _ in range(3)]
    phi = ag.BumpTestFunction((0.0, 0.0), 1.0)
    res = ag.weak_residual([0.0, 0.1, 0.2], zero_u, zero_m, phi,
                           ag.InteractionKernel("degenerate"), 0.05, 1.0, 1)
    assert res == 0.0


def test_weak_residual_analytic_heat_snapshots():
    # analytic diffusion with no interaction: residual is pure time-quadrature
    # error, bounded by the trapezoid estimate from the integrand's curvature
    geo = ag.GridGeometry((-4.0, -4.0), (8.0, 8.0), (128, 128))
    nu = 0.05
    kernel = zero_kernel()
    X, Y = geo.center_mesh()
    times = np.linspace(0.0, 0.5, 11)
    v0 = 0.09
    us, ms = [], []
    for t in times:
        v = v0 + 2 * nu * t
        us.append(ag.DensityField(geo, np.exp(-(X**2 + Y**2) / (2 * v)) / (2 * math.pi * v)))
        ms.append(_field(geo, np.ones(geo.cells)))
    phi = ag.BumpTestFunction((0.0, 0.0), 1.5)
    res = ag.weak_residual(times, us, ms, phi, kernel, nu, lam=1e-300, zeta=1)
    # trapezoid error bound: (dt^2/12) * total variation of d/dt <u_t, lap phi>
    pair = np.array([float((u.values * phi.laplacian(np.stack(geo.center_mesh(), axis=-1))).sum()
                           * geo.cell_volume) for u in us])
    curv = np.abs(np.diff(pair, 2)).sum() / (times[1] - times[0])
    bound = (times[1] - times[0]) ** 2 / 12 * nu * curv * 4.0
    assert res < max(bound, 1e-8)


def test_weak_residual_decreases_with_dt():
    cfg = ag.SimConfig(
        dt=0.02, t_end=0.2, snapshot_times=tuple(np.arange(11) * 0.02),
        geometry=ag.GridGeometry((-2.0, -2.0), (6.0, 6.0), (128, 128)),
        kernel=ag.InteractionKernel("degenerate"),
        initial=ag.InitialLaw("bump", center=(1.0, 1.0), radius=1.0),
    )
    phi = ag.BumpTestFunction((1.0, 1.0), 1.6)
    res = {}
    for dt in (0.02, 0.01):
        n = round(0.2 / dt)
        c = replace(cfg, dt=dt, snapshot_times=tuple(k * dt for k in range(n + 1)))
        rec = ag.solve_pde(c)
        res[dt] = ag.weak_residual(rec.times, [s.u for s in rec.snapshots],
                                   [s.m for s in rec.snapshots], phi,
                                   c.kernel, c.nu, c.lam, c.zeta)
    assert res[0.02] / res[0.01] >= 1.8
