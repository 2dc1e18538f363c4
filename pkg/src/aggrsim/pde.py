"""Mean-field limit solver: density transport coupled to field degradation.

The density obeys

    du/dt = nu * Laplacian(u) - div(u * b(u, m)),     nu = sigma^2 / 2,

and the environment m degrades as dm/dt = -lambda * u * m^zeta.  The
solver works on a periodic spectral grid padded well beyond the support
of the dynamics, so it emulates free space: diffusion is applied exactly
per Fourier mode with the multiplier exp(-nu |k|^2 t), and the transport
term is an explicit spectral divergence.  One step is Lie splitting,

    u  <-  heat_propagate(u - dt * div(u b),  dt),

first-order in dt, with diffusion unconditionally stable; only the
advection limits dt (dt * |b|_sup should stay below the cell size).
Negative undershoot from the spectral transport is left in place (clipping
would break mass conservation) and is monitored by the test suite; the
environment update clips it out of the exposure integral.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AggrsimError, BoundaryMassLeak, NonFiniteField
from .grid import DensityField, GridGeometry, ScalarField, VectorField, require_same_geometry
from .interaction import InteractionKernel, drift_field
from .particles import MatrixFieldState, _snapshot_steps, update_m


@lru_cache(maxsize=None)
def _wavenumbers_sq(geometry: GridGeometry) -> np.ndarray:
    """|k|^2 on the rfftn layout of the grid."""
    ks = []
    d = geometry.dim
    for ax in range(d):
        n = geometry.cells[ax]
        dx = geometry.spacing[ax]
        if ax == d - 1:
            k = 2.0 * math.pi * np.fft.rfftfreq(n, d=dx)
        else:
            k = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
        shape = [1] * d
        shape[ax] = len(k)
        ks.append((k**2).reshape(shape))
    out = sum(ks)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _wavenumber(geometry: GridGeometry, axis: int) -> np.ndarray:
    d = geometry.dim
    n = geometry.cells[axis]
    dx = geometry.spacing[axis]
    if axis == d - 1:
        k = 2.0 * math.pi * np.fft.rfftfreq(n, d=dx)
    else:
        k = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
    shape = [1] * d
    shape[axis] = len(k)
    out = k.reshape(shape)
    out.setflags(write=False)
    return out


def boundary_band_mass(field: ScalarField, band: int = 1) -> float:
    """Absolute mass sitting in the outermost ``band`` cells of the grid."""
    vals = np.abs(field.values)
    interior = vals[tuple(slice(band, n - band) for n in field.geometry.cells)]
    return float((vals.sum() - interior.sum()) * field.geometry.cell_volume)


def heat_propagate(field: ScalarField, tau: float, nu: float, *, boundary_tol: float = 1e-6):
    """Apply the diffusion semigroup for time ``tau``: multiplier exp(-nu |k|^2 tau).

    Exact per Fourier mode and mass-preserving (the zero mode is untouched).
    The field must be negligible near the boundary so the periodic
    transform faithfully represents free-space diffusion; otherwise
    :class:`BoundaryMassLeak` is raised.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if nu <= 0:
        raise ValueError("nu must be positive")
    leak = boundary_band_mass(field)
    if leak >= boundary_tol:
        raise BoundaryMassLeak(
            f"boundary band holds mass {leak:.3e} >= {boundary_tol:.1e}; enlarge the domain padding"
        )
    geometry = field.geometry
    axes = tuple(range(geometry.dim))
    fhat = np.fft.rfftn(field.values)
    fhat *= np.exp(-nu * _wavenumbers_sq(geometry) * tau)
    out = np.fft.irfftn(fhat, s=geometry.cells, axes=axes)
    return type(field)(geometry, out)


def divergence_flux(u: ScalarField, b: VectorField) -> ScalarField:
    """Spectral divergence of the flux u*b; integrates to zero exactly."""
    geometry = require_same_geometry(u, b)
    acc = None
    for ax in range(geometry.dim):
        fhat = np.fft.rfftn(u.values * b.values[..., ax])
        term = 1j * _wavenumber(geometry, ax) * fhat
        acc = term if acc is None else acc + term
    return ScalarField(geometry, np.fft.irfftn(acc, s=geometry.cells, axes=tuple(range(geometry.dim))))


@dataclass
class PdeState:
    """Density, environment and clock of the mean-field solver."""

    u: DensityField
    m_state: MatrixFieldState
    time: float
    nu: float

    def __post_init__(self):
        require_same_geometry(self.u, self.m_state.m0)
        if self.nu <= 0:
            raise ValueError("nu must be positive")


def pde_step(state: PdeState, kernel: InteractionKernel, dt: float, *, boundary_tol: float = 1e-6) -> PdeState:
    """One splitting step: explicit transport, then exact diffusion.

    First-order consistent in dt; preserves the mass of u to roundoff.
    Raises :class:`NonFiniteField` if the state blows up (advection CFL
    violated) and :class:`BoundaryMassLeak` if mass reaches the padding.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u, m_state = state.u, state.m_state
    b = drift_field(u, m_state.current_m(), kernel)
    flux = divergence_flux(u, b)
    transported = DensityField(u.geometry, u.values - dt * flux.values)
    u_new = heat_propagate(transported, dt, state.nu, boundary_tol=boundary_tol)
    if not np.all(np.isfinite(u_new.values)):
        raise NonFiniteField("density became non-finite; reduce dt (advection CFL)")
    m_new = update_m(m_state, u, dt)
    return PdeState(u_new, m_new, state.time + dt, state.nu)


@dataclass
class PdeSnapshot:
    time: float
    u: DensityField
    m: ScalarField


@dataclass
class PdeRunRecord:
    config: "SimConfig"
    snapshots: list[PdeSnapshot]
    mass_extrema: tuple[float, float]
    final_m_state: MatrixFieldState

    @property
    def times(self) -> list[float]:
        return [s.time for s in self.snapshots]


def advective_dt_bound(u: ScalarField, m: ScalarField, kernel: InteractionKernel) -> float:
    """Conservative dt bound min(spacing)/sup|b| for the explicit transport."""
    b = drift_field(u, m, kernel)
    sup = b.sup_norm()
    if sup == 0.0:
        return math.inf
    return min(u.geometry.spacing) / sup


def solve_pde(config: "SimConfig", u0: DensityField | None = None, *, boundary_tol: float = 1e-6) -> PdeRunRecord:
    """Integrate the mean-field system for ``config`` (no randomness).

    ``u0`` defaults to the config's initial law sampled on the grid.
    Snapshot handling matches the particle runner.  Deterministic: the
    same config always yields bit-identical records.
    """
    from .config import SimConfig  # local import to avoid a cycle

    assert isinstance(config, SimConfig)
    geometry = config.geometry
    if u0 is None:
        u0 = config.initial.density_field(geometry)
    require_same_geometry(u0, ScalarField(geometry, np.zeros(geometry.cells)))
    m_state = MatrixFieldState.constant(geometry, config.m0, config.lam, config.zeta, config.bound_M)
    state = PdeState(DensityField(geometry, u0.values.copy()), m_state, 0.0, config.nu)

    n_steps = int(round(config.t_end / config.dt)) if config.t_end > 0 else 0
    snap_times = config.snapshot_times if config.snapshot_times else (0.0, config.t_end)
    snap_steps = _snapshot_steps(snap_times, config.dt, n_steps) if n_steps > 0 else {0: 0.0}

    bound = advective_dt_bound(state.u, m_state.current_m(), config.kernel)
    if config.dt > bound:
        warnings.warn(
            f"dt={config.dt:g} exceeds the advective bound {bound:.3g}; expect instability",
            stacklevel=2,
        )

    snapshots: list[PdeSnapshot] = []
    mass_lo, mass_hi = math.inf, -math.inf
    step = 0
    try:
        for step in range(n_steps + 1):
            mass = state.u.mass()
            mass_lo = min(mass_lo, mass)
            mass_hi = max(mass_hi, mass)
            if step in snap_steps:
                snapshots.append(PdeSnapshot(snap_steps[step], state.u.copy(), state.m_state.current_m()))
            if step == n_steps:
                break
            state = pde_step(state, config.kernel, config.dt, boundary_tol=boundary_tol)
    except AggrsimError as err:
        if err.step_index is None:
            err.step_index = step
        raise
    return PdeRunRecord(config, snapshots, (mass_lo, mass_hi), state.m_state)
