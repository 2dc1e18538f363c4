"""Scaled mollifiers and deposition of particles onto a density grid.

The empirical measure of ``n`` particles is smoothed with a compactly
supported probability density ``W`` rescaled as

    W_n(x) = n^beta * W(n^(beta/d) * x),        0 < beta < 1,

so the smoothing radius shrinks like ``n^(-beta/d)`` while the total mass
stays 1.  The smoothed density at a cell center is the average of the
translated kernel over all particles.

Deposition is a scatter-add of one compact stencil per particle, with the
stencil weights renormalized per particle so the discrete mass of every
particle's contribution is exactly 1/n.  That keeps the total mass of the
deposited field equal to 1 to machine precision on any resolvable grid.
Stencil weights depend only on the particle's position within its cell, so
shifting all particles by a whole number of cells shifts the output field
bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import GeometryMismatch, ParticleOutOfDomain, UnresolvableKernel
from .grid import DensityField, GridGeometry


def _bump(r: np.ndarray) -> np.ndarray:
    """C-infinity bump exp(-1/(1-r^2)) on r < 1, zero outside."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    s = r[inside]
    out[inside] = np.exp(-1.0 / (1.0 - s * s))
    return out


def _wendland_c2(r: np.ndarray) -> np.ndarray:
    """Wendland C2 polynomial (1-r)^4 (4r+1) on r < 1, zero outside."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    s = r[inside]
    out[inside] = (1.0 - s) ** 4 * (4.0 * s + 1.0)
    return out


PROFILES = {"bump": _bump, "wendland_c2": _wendland_c2}


def _sphere_area(d: int) -> float:
    # surface area of the unit sphere in R^d
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@lru_cache(maxsize=None)
def _profile_norm(profile: str, dim: int) -> float:
    """Constant c with integral of c*profile(|x|) over R^d equal to 1."""
    shape = PROFILES[profile]
    radial, _ = quad(lambda r: float(shape(np.array(r))) * r ** (dim - 1), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return 1.0 / (_sphere_area(dim) * radial)


@dataclass(frozen=True)
class MollifierSpec:
    """Scaled smoothing kernel ``W_n`` for a given particle count.

    ``profile`` names the radial shape of the base kernel ``W`` (unit
    support radius, normalized to unit mass); ``beta`` in (0,1) controls
    how fast the support shrinks with ``n_particles``.
    """

    profile: str = "bump"
    dim: int = 2
    beta: float = 0.5
    n_particles: int = 1

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"unknown mollifier profile {self.profile!r}; choices: {sorted(PROFILES)}")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie strictly between 0 and 1")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not (1 <= self.dim <= 3):
            raise ValueError("supported dimensions are 1..3")

    @property
    def support_radius(self) -> float:
        """Support radius of the scaled kernel: n^(-beta/d)."""
        return float(self.n_particles) ** (-self.beta / self.dim)

    @property
    def height_scale(self) -> float:
        """Amplitude factor n^beta of the scaled kernel."""
        return float(self.n_particles) ** self.beta

    def evaluate(self, radii: np.ndarray) -> np.ndarray:
        """Value of the scaled kernel at distance ``radii`` from its center."""
        arg = np.asarray(radii, dtype=np.float64) * float(self.n_particles) ** (self.beta / self.dim)
        return self.height_scale * _profile_norm(self.profile, self.dim) * PROFILES[self.profile](arg)


@dataclass(frozen=True)
class KernelStencil:
    """Discrete scaled kernel bound to one grid.

    ``weights`` is the kernel sampled at cell centers around a particle
    sitting exactly on a cell center, renormalized to discrete unit mass.
    ``halfwidth`` is the window half-extent in cells per axis; the window
    also covers every off-center particle position.
    """

    spec: MollifierSpec
    geometry: GridGeometry
    halfwidth: tuple[int, ...]
    weights: np.ndarray

    @property
    def window_shape(self) -> tuple[int, ...]:
        return tuple(2 * h + 1 for h in self.halfwidth)


def _window_weights(spec: MollifierSpec, geometry: GridGeometry, halfwidth, frac: np.ndarray) -> np.ndarray:
    """Renormalized stencil weights for particles at cell offsets ``frac``.

    ``frac`` has shape (n, d) with entries in [-1/2, 1/2]; the returned
    weights have shape (n, *window) and each particle's slice sums to
    1/cell_volume exactly (one mass-correction pass on the center cell).
    """
    n = frac.shape[0]
    d = geometry.dim
    dx = geometry.spacing
    dist2 = np.zeros((n,) + tuple(1 for _ in range(d)))
    for ax in range(d):
        h = halfwidth[ax]
        offs = np.arange(-h, h + 1, dtype=np.float64)
        coord = (offs[None, :] - frac[:, ax][:, None]) * dx[ax]  # (n, w_ax)
        shape = (n,) + (1,) * ax + (2 * h + 1,) + (1,) * (d - 1 - ax)
        dist2 = dist2 + (coord**2).reshape(shape)
    w = spec.evaluate(np.sqrt(dist2))
    vol = geometry.cell_volume
    axes = tuple(range(1, d + 1))
    total = w.sum(axis=axes) * vol
    if np.any(total <= 0.0):
        raise UnresolvableKernel("kernel support missed every cell center; grid too coarse")
    w /= total.reshape((n,) + (1,) * d)
    # one correction pass pins the discrete mass to exactly 1/vol
    center = (slice(None),) + tuple(h for h in halfwidth)
    resid = 1.0 - w.sum(axis=axes) * vol
    w[center] += resid / vol
    return w


def build_scaled_kernel(spec: MollifierSpec, geometry: GridGeometry) -> KernelStencil:
    """Sample the scaled kernel on the grid lattice and renormalize it.

    Raises :class:`UnresolvableKernel` unless the kernel support spans at
    least 3 cells along every axis.
    """
    if spec.dim != geometry.dim:
        raise ValueError(f"mollifier dimension {spec.dim} != grid dimension {geometry.dim}")
    radius = spec.support_radius
    for ax, dx in enumerate(geometry.spacing):
        span = 2.0 * radius / dx
        if span < 3.0:
            raise UnresolvableKernel(
                f"scaled kernel support spans {span:.2f} cells along axis {ax} (< 3); "
                f"refine the grid or lower beta/n_particles"
            )
    halfwidth = tuple(int(math.ceil(radius / dx + 0.5)) for dx in geometry.spacing)
    weights = _window_weights(spec, geometry, halfwidth, np.zeros((1, geometry.dim)))[0]
    weights.setflags(write=False)
    return KernelStencil(spec, geometry, halfwidth, weights)


def deposit_density(particles, stencil: KernelStencil, geometry: GridGeometry) -> DensityField:
    """Smoothed empirical density of the particles on the grid.

    ``particles`` may be a ParticleState or a plain (n, d) position array.
    Every particle must sit far enough inside the grid that its stencil
    window stays in bounds; otherwise :class:`ParticleOutOfDomain` names
    the first offending particle.
    """
    if geometry != stencil.geometry:
        raise GeometryMismatch("stencil was built for a different grid")
    positions = np.asarray(getattr(particles, "positions", particles), dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != geometry.dim:
        raise ValueError(f"positions must have shape (n, {geometry.dim})")
    n = positions.shape[0]
    d = geometry.dim
    dx = np.array(geometry.spacing)
    origin = np.array(geometry.origin)
    cells = geometry.cells

    rel = (positions - origin) / dx - 0.5
    base = np.floor(rel + 0.5).astype(np.int64)  # nearest cell index
    frac = rel - base  # in [-1/2, 1/2]

    for ax in range(d):
        h = stencil.halfwidth[ax]
        bad = (base[:, ax] - h < 0) | (base[:, ax] + h > cells[ax] - 1)
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise ParticleOutOfDomain(
                f"particle {idx} at {positions[idx]} is within the kernel margin "
                f"of the grid boundary (axis {ax})",
                index=idx,
            )

    w = _window_weights(stencil.spec, geometry, stencil.halfwidth, frac)
    w *= 1.0 / n

    flat = np.zeros((n,) + (1,) * d, dtype=np.int64)
    for ax in range(d):
        h = stencil.halfwidth[ax]
        offs = np.arange(-h, h + 1, dtype=np.int64)
        idx_ax = base[:, ax][:, None] + offs[None, :]
        shape = (n,) + (1,) * ax + (2 * h + 1,) + (1,) * (d - 1 - ax)
        stride = math.prod(cells[ax + 1 :])
        flat = flat + idx_ax.reshape(shape) * stride

    values = np.bincount(flat.ravel(), weights=w.ravel(), minlength=math.prod(cells)).reshape(cells)
    return DensityField(geometry, values)
