"""Convergence metrics and the weak-formulation residual diagnostic.

The particle-to-PDE comparison uses the metric of locally-L2 convergence:
capped L2 distances over balls of radius 1, 2, ... around a reference
center, combined with weights 2^-n.  The weak residual checks the
test-function identity a solution pair (u, m) must satisfy: transported
mass against diffusion and drift terms for u, and the explicit
degradation law for m.  Both are pure functions of field snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BallOutsideDomain
from .grid import ScalarField, require_same_geometry
from .interaction import InteractionKernel, drift_field
from .particles import f_zeta


def _ball_mask(geometry, radius: float, center: Sequence[float]) -> np.ndarray:
    mesh = geometry.center_mesh()
    dist2 = sum((mesh[ax] - center[ax]) ** 2 for ax in range(geometry.dim))
    return dist2 <= radius**2


def l2_ball(f: ScalarField, g: ScalarField, radius: float, center: Sequence[float]) -> float:
    """L2 norm of f - g over cells whose centers lie in the given ball.

    The ball must be contained in the grid box (touching the boundary is
    allowed); otherwise :class:`BallOutsideDomain` is raised.
    """
    geometry = require_same_geometry(f, g)
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = tuple(float(c) for c in center)
    for ax in range(geometry.dim):
        lo, hi = geometry.origin[ax], geometry.upper[ax]
        if center[ax] - radius < lo - 1e-9 or center[ax] + radius > hi + 1e-9:
            raise BallOutsideDomain(
                f"ball of radius {radius} at {center} leaves the domain along axis {ax}"
            )
    mask = _ball_mask(geometry, radius, center)
    diff = (f.values - g.values)[mask]
    return float(np.sqrt((diff**2).sum() * geometry.cell_volume))


def d_l2loc(f: ScalarField, g: ScalarField, n_max: int, center: Sequence[float] | None = None) -> float:
    """Locally-L2 metric: sum over n <= n_max of 2^-n * min(ball-L2 distance, 1).

    The omitted tail is certified below 2^-n_max (every capped term is at
    most 1).  The result lies in [0, 1] and is 0 exactly when f == g on
    the covered balls.  ``center`` defaults to the grid box center.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    geometry = require_same_geometry(f, g)
    if center is None:
        center = tuple(o + e / 2 for o, e in zip(geometry.origin, geometry.extent))
    total = 0.0
    for n in range(1, n_max + 1):
        total += 2.0**-n * min(l2_ball(f, g, float(n), center), 1.0)
    return total


@dataclass(frozen=True)
class BumpTestFunction:
    """Smooth compactly supported test function with analytic derivatives.

    phi(x) = amplitude * exp(-1/(1 - s)) on s < 1 with s = |x-center|^2/radius^2.
    """

    center: tuple[float, ...]
    radius: float
    amplitude: float = 1.0

    def _s(self, points: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        return ((points - c) ** 2).sum(axis=-1) / self.radius**2

    def value(self, points: np.ndarray) -> np.ndarray:
        s = self._s(np.asarray(points, dtype=np.float64))
        out = np.zeros_like(s)
        core = s < 1.0
        out[core] = self.amplitude * np.exp(-1.0 / (1.0 - s[core]))
        return out

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        s = self._s(points)
        out = np.zeros_like(points)
        core = s < 1.0
        q = np.zeros_like(s)
        q[core] = 1.0 / (1.0 - s[core])
        phi = np.zeros_like(s)
        phi[core] = self.amplitude * np.exp(-q[core])
        coeff = -phi * q**2 * 2.0 / self.radius**2  # d(phi)/ds * ds/dx factor
        return coeff[..., None] * (points - np.asarray(self.center))

    def laplacian(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        d = points.shape[-1]
        s = self._s(points)
        out = np.zeros_like(s)
        core = s < 1.0
        q = 1.0 / (1.0 - s[core])
        phi = self.amplitude * np.exp(-q)
        phi_s = -phi * q**2
        phi_ss = phi * (q**4 - 2.0 * q**3)
        out[core] = phi_ss * 4.0 * s[core] / self.radius**2 + phi_s * 2.0 * d / self.radius**2
        return out


def _grid_points(geometry) -> np.ndarray:
    mesh = geometry.center_mesh()
    return np.stack(mesh, axis=-1)


def weak_residual(
    times: Sequence[float],
    u_snapshots: Sequence[ScalarField],
    m_snapshots: Sequence[ScalarField],
    phi: BumpTestFunction,
    kernel: InteractionKernel,
    nu: float,
    lam: float,
    zeta: int,
) -> float:
    """Deviation of snapshot trajectories from the weak solution identity.

    Computes the sup over snapshot times of

        |<u_t - u_0, phi> - nu * int_0^t <u_s, lap phi> ds
                          - int_0^t <u_s, b(u_s, m_s).grad phi> ds|

    plus the sup over times of |<m_t - F(m_0, int_0^t u ds), phi>|, with
    time integrals by the trapezoid rule over the snapshots.  Zero (up to
    time-quadrature error) exactly on solutions; used as a solver
    diagnostic.
    """
    if not (len(times) == len(u_snapshots) == len(m_snapshots)):
        raise ValueError("times, u_snapshots and m_snapshots must align")
    if len(times) < 2:
        raise ValueError("need at least two snapshots")
    geometry = require_same_geometry(u_snapshots[0], m_snapshots[0])
    vol = geometry.cell_volume
    pts = _grid_points(geometry)
    phi_vals = phi.value(pts)
    lap_vals = phi.laplacian(pts)
    grad_vals = phi.gradient(pts)

    times = np.asarray(times, dtype=np.float64)
    pair_u = np.array([float((u.values * phi_vals).sum() * vol) for u in u_snapshots])
    pair_lap = np.array([float((u.values * lap_vals).sum() * vol) for u in u_snapshots])
    pair_drift = np.empty(len(times))
    for j, (u, m) in enumerate(zip(u_snapshots, m_snapshots)):
        b = drift_field(u, m, kernel)
        pair_drift[j] = float((u.values * (b.values * grad_vals).sum(axis=-1)).sum() * vol)

    # cumulative trapezoid integrals from t_0 to each snapshot time
    def cumtrapz(y):
        dt = np.diff(times)
        return np.concatenate([[0.0], np.cumsum(0.5 * dt * (y[1:] + y[:-1]))])

    int_lap = cumtrapz(pair_lap)
    int_drift = cumtrapz(pair_drift)
    res_u = np.abs((pair_u - pair_u[0]) - nu * int_lap - int_drift).max()

    u_stack = np.stack([u.values for u in u_snapshots])
    exposure = np.zeros_like(u_stack)
    dts = np.diff(times).reshape((-1,) + (1,) * (u_stack.ndim - 1))
    exposure[1:] = np.cumsum(0.5 * dts * (u_stack[1:] + u_stack[:-1]), axis=0)
    m0_vals = m_snapshots[0].values
    res_m = 0.0
    for j in range(len(times)):
        predicted = f_zeta(m0_vals, exposure[j], lam, zeta)
        res_m = max(res_m, abs(float(((m_snapshots[j].values - predicted) * phi_vals).sum() * vol)))
    return float(res_u + res_m)
