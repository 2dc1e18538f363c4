"""The N-particle system: noise, stepping, field degradation, full runs.

Particles follow an Euler-Maruyama discretization of

    dX_i = b(u, m)(X_i) dt + sigma dB_i,

where the drift field b is computed on the grid from the smoothed
empirical density u and the environmental field m, then interpolated
(multi-linearly) at particle positions.  The environmental field obeys
dm/dt = -lambda * u * m^zeta pointwise; its solution is explicit given
the time integral of u, so m is never integrated numerically: the state
stores (m0, integral of u dt) and materializes m through :func:`f_zeta`
on demand.

Randomness comes from one counter-based Philox stream per run.  Each
simulation step consumes a disjoint counter block and draws its Gaussian
increments in particle-index order, so runs are reproducible bit-for-bit
regardless of how work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AggrsimError, ParticleOutOfDomain
from .grid import DensityField, GridGeometry, ScalarField, VectorField, require_same_geometry
from .interaction import drift_field
from .smoothing import build_scaled_kernel, deposit_density

#: counter spacing between rng blocks; each block draws far fewer values
_BLOCK = 2**64


def _rng_for_block(seed: int, block: int) -> np.random.Generator:
    bg = np.random.Philox(key=seed % (2**128))
    bg.advance(block * _BLOCK)
    return np.random.Generator(bg)


@dataclass
class ParticleState:
    """Positions of n particles plus the position of the run's RNG stream.

    ``rng_block`` is the index of the next unused counter block of the
    Philox stream keyed by ``seed``; block 0 is reserved for initial
    sampling and step k consumes block k.
    """

    positions: np.ndarray
    time: float = 0.0
    seed: int = 0
    rng_block: int = 1

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2:
            raise ValueError("positions must have shape (n, d)")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("positions must be finite")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> "ParticleState":
        return ParticleState(self.positions.copy(), self.time, self.seed, self.rng_block)


@dataclass(frozen=True)
class InitialLaw:
    """Named initial distribution for particle positions and the PDE density.

    ``uniform``: uniform on the box [low, high].
    ``bump``: density proportional to exp(-1/(1 - |x - center|^2/radius^2)),
    a smooth compactly supported profile suitable for convergence studies.
    """

    law: str = "uniform"
    low: tuple[float, ...] = (0.0, 0.0)
    high: tuple[float, ...] = (2.0, 2.0)
    center: tuple[float, ...] = (1.0, 1.0)
    radius: float = 0.8

    def __post_init__(self):
        if self.law not in ("uniform", "bump"):
            raise ValueError(f"unknown initial law {self.law!r}; choices: uniform, bump")
        object.__setattr__(self, "low", tuple(float(x) for x in self.low))
        object.__setattr__(self, "high", tuple(float(x) for x in self.high))
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        if self.law == "uniform" and any(h <= l for l, h in zip(self.low, self.high)):
            raise ValueError("uniform law needs high > low per axis")
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.low) if self.law == "uniform" else len(self.center)

    def density_values(self, geometry: GridGeometry) -> np.ndarray:
        """Density sampled at cell centers, renormalized to discrete mass 1."""
        mesh = geometry.center_mesh()
        if self.law == "uniform":
            inside = np.ones(geometry.cells, dtype=bool)
            for ax in range(geometry.dim):
                inside &= (mesh[ax] >= self.low[ax]) & (mesh[ax] <= self.high[ax])
            vals = inside.astype(np.float64)
        else:
            s2 = sum((mesh[ax] - self.center[ax]) ** 2 for ax in range(geometry.dim)) / self.radius**2
            vals = np.zeros(geometry.cells)
            core = s2 < 1.0
            vals[core] = np.exp(-1.0 / (1.0 - s2[core]))
        total = vals.sum() * geometry.cell_volume
        if total <= 0:
            raise ValueError("initial law has no mass on this grid")
        return vals / total

    def density_field(self, geometry: GridGeometry) -> DensityField:
        return DensityField(geometry, self.density_values(geometry))


def sample_initial(law: InitialLaw, n: int, seed: int) -> ParticleState:
    """Draw n i.i.d. positions from the named law (RNG block 0 of ``seed``)."""
    if n < 1:
        raise ValueError("need at least one particle")
    rng = _rng_for_block(seed, 0)
    d = law.dim
    if law.law == "uniform":
        lo = np.array(law.low)
        hi = np.array(law.high)
        pos = lo + (hi - lo) * rng.random((n, d))
    else:
        center = np.array(law.center)
        samples = []
        have = 0
        while have < n:
            batch = max(4 * (n - have), 64)
            prop = rng.random((batch, d)) * 2.0 - 1.0
            accept_u = rng.random(batch)
            s2 = (prop**2).sum(axis=1)
            ok = s2 < 1.0
            # accept with probability exp(-1/(1-s^2)) / exp(-1), the profile peak
            dens = np.zeros(batch)
            dens[ok] = np.exp(-1.0 / (1.0 - s2[ok]) + 1.0)
            keep = prop[accept_u < dens]
            samples.append(keep)
            have += len(keep)
        pos = center + law.radius * np.concatenate(samples, axis=0)[:n]
    return ParticleState(pos, time=0.0, seed=seed, rng_block=1)


# ---------------------------------------------------------------------------
# environmental field: explicit degradation law

def f_zeta(a, b, lam, zeta: int):
    """Explicit solution of dm/dt = -lam * u * m^zeta after exposure b = integral u dt.

    Starting value ``a`` decays to ``a * exp(-lam*b)`` for zeta = 1 and to
    ``a / (a^(zeta-1) * (zeta-1) * lam * b + 1)^(1/(zeta-1))`` for zeta >= 2.
    Vectorizes over ``a``, ``b`` and ``lam``; the result lies in [0, a] and
    is nonincreasing in ``b``.
    """
    if zeta < 1 or int(zeta) != zeta:
        raise ValueError("zeta must be an integer >= 1")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if zeta == 1:
        out = a * np.exp(-lam * b)
    else:
        out = a / (a ** (zeta - 1) * (zeta - 1) * lam * b + 1.0) ** (1.0 / (zeta - 1))
    return float(out) if out.ndim == 0 else out


@dataclass
class MatrixFieldState:
    """Degradable environmental field stored as (m0, accumulated exposure).

    The current field is ``f_zeta(m0, u_time_integral)`` cell by cell;
    keeping the exposure integral instead of stepping m avoids compounding
    exponentiation error and makes the monotonicity in time exact.
    """

    m0: ScalarField
    u_time_integral: ScalarField
    lam: float = 1.0
    zeta: int = 1
    bound_M: float = 1.0

    def __post_init__(self):
        require_same_geometry(self.m0, self.u_time_integral)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.bound_M <= 0:
            raise ValueError("bound_M must be positive")
        if self.m0.values.min() < 0 or self.m0.values.max() > self.bound_M:
            raise ValueError("m0 must take values in [0, bound_M]")

    @classmethod
    def constant(cls, geometry: GridGeometry, value: float, lam: float, zeta: int, bound_M: float):
        m0 = ScalarField(geometry, np.full(geometry.cells, float(value)))
        zero = ScalarField(geometry, np.zeros(geometry.cells))
        return cls(m0, zero, lam, zeta, bound_M)

    def current_m(self) -> ScalarField:
        vals = f_zeta(self.m0.values, self.u_time_integral.values, self.lam, self.zeta)
        return ScalarField(self.m0.geometry, vals)


def update_m(state: MatrixFieldState, u: ScalarField, dt: float) -> MatrixFieldState:
    """Accumulate exposure: u_time_integral += u * dt (per cell).

    Negative density values (spectral undershoot on the PDE side) are
    clipped to zero in the exposure so the degradation stays monotone.
    """
    require_same_geometry(state.m0, u)
    inc = np.maximum(u.values, 0.0) * dt
    new_int = ScalarField(u.geometry, state.u_time_integral.values + inc)
    return MatrixFieldState(state.m0, new_int, state.lam, state.zeta, state.bound_M)


# ---------------------------------------------------------------------------
# Euler-Maruyama stepping

def interpolate_vector(fieldv: VectorField, positions: np.ndarray) -> np.ndarray:
    """Multi-linear interpolation of a vector field at particle positions.

    Positions must lie within the convex hull of cell centers; at a cell
    center the interpolant reproduces the stored value exactly.
    """
    geo = fieldv.geometry
    d = geo.dim
    dx = np.array(geo.spacing)
    origin = np.array(geo.origin)
    rel = (positions - origin) / dx - 0.5
    max_idx = np.array(geo.cells) - 1
    if np.any(rel < -1e-12) or np.any(rel > max_idx + 1e-12):
        bad = int(np.argmax(np.any((rel < -1e-12) | (rel > max_idx + 1e-12), axis=1)))
        raise ParticleOutOfDomain(
            f"particle {bad} at {positions[bad]} is outside the interpolation hull", index=bad
        )
    i0 = np.clip(np.floor(rel).astype(np.int64), 0, max_idx - 1)
    t = rel - i0
    out = np.zeros((positions.shape[0], d))
    for corner in range(2**d):
        bits = [(corner >> ax) & 1 for ax in range(d)]
        w = np.ones(positions.shape[0])
        idx = []
        for ax in range(d):
            w = w * (t[:, ax] if bits[ax] else 1.0 - t[:, ax])
            idx.append(i0[:, ax] + bits[ax])
        out += w[:, None] * fieldv.values[tuple(idx)]
    return out


def step_em(state: ParticleState, drift: VectorField, sigma: float, dt: float) -> ParticleState:
    """One Euler-Maruyama step: X += b(X) dt + sigma * sqrt(dt) * xi.

    The Gaussian increments come from the state's next RNG block, drawn in
    particle-index order.  Raises :class:`ParticleOutOfDomain` if any
    particle leaves the drift grid's interpolation hull after the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    b = interpolate_vector(drift, state.positions)
    rng = _rng_for_block(state.seed, state.rng_block)
    xi = rng.standard_normal(state.positions.shape)
    new_pos = state.positions + b * dt + sigma * math.sqrt(dt) * xi
    new_state = ParticleState(new_pos, state.time + dt, state.seed, state.rng_block + 1)
    # post-step containment check against the same grid
    geo = drift.geometry
    dx = np.array(geo.spacing)
    rel = (new_pos - np.array(geo.origin)) / dx - 0.5
    max_idx = np.array(geo.cells) - 1
    outside = np.any((rel < 0) | (rel > max_idx), axis=1)
    if np.any(outside):
        bad = int(np.argmax(outside))
        raise ParticleOutOfDomain(
            f"particle {bad} left the domain at t={new_state.time:.6g}: {new_pos[bad]}", index=bad
        )
    return new_state


# ---------------------------------------------------------------------------
# full runs

@dataclass
class Snapshot:
    """State captured at one requested time."""

    time: float
    particles: ParticleState
    u: DensityField
    m: ScalarField
    drift: VectorField


@dataclass
class RunRecord:
    """Everything a particle run produces, in memory."""

    config: "SimConfig"
    snapshots: list[Snapshot]
    mass_extrema: tuple[float, float]
    final_m_state: MatrixFieldState

    @property
    def times(self) -> list[float]:
        return [s.time for s in self.snapshots]


def _snapshot_steps(snapshot_times: Sequence[float], dt: float, n_steps: int) -> dict[int, float]:
    steps: dict[int, float] = {}
    for t in snapshot_times:
        k = int(round(t / dt))
        if k < 0 or k > n_steps:
            raise ValueError(f"snapshot time {t} outside [0, t_end]")
        steps.setdefault(k, t)
    return steps


def simulate(config: "SimConfig") -> RunRecord:
    """Run the coupled particle / environment system for ``config``.

    Per step: deposit the smoothed density, refresh the drift field every
    ``drift_refresh_every`` steps from the current (u, m), advance the
    particles with Euler-Maruyama, accumulate the environment's exposure.
    Deterministic given (config, seed).  Module errors are re-raised with
    the step index attached.
    """
    from .config import SimConfig  # local import to avoid a cycle

    assert isinstance(config, SimConfig)
    geometry = config.geometry
    stencil = build_scaled_kernel(config.mollifier, geometry)
    state = sample_initial(config.initial, config.n_particles, config.seed)
    m_state = MatrixFieldState.constant(geometry, config.m0, config.lam, config.zeta, config.bound_M)

    n_steps = int(round(config.t_end / config.dt)) if config.t_end > 0 else 0
    snap_times = config.snapshot_times if config.snapshot_times else (0.0, config.t_end)
    snap_steps = _snapshot_steps(snap_times, config.dt, n_steps) if n_steps > 0 else {0: 0.0}

    snapshots: list[Snapshot] = []
    mass_lo, mass_hi = math.inf, -math.inf
    drift = None
    step = 0
    try:
        for step in range(n_steps + 1):
            u = deposit_density(state, stencil, geometry)
            mass = u.mass()
            mass_lo = min(mass_lo, mass)
            mass_hi = max(mass_hi, mass)
            if step % config.drift_refresh_every == 0:
                drift = drift_field(u, m_state.current_m(), config.kernel)
            if step in snap_steps:
                snapshots.append(Snapshot(snap_steps[step], state.copy(), u, m_state.current_m(), drift.copy()))
            if step == n_steps:
                break
            state = step_em(state, drift, config.sigma, config.dt)
            m_state = update_m(m_state, u, config.dt)
    except AggrsimError as err:
        if err.step_index is None:
            err.step_index = step
        raise
    return RunRecord(config, snapshots, (mass_lo, mass_hi), m_state)
