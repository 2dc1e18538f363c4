"""Interaction strengths and the nonlocal aggregation drift.

The drift felt at a point x is the integral over all positions y of the
unit vector from x to y weighted by a scalar interaction strength
g(|y - x|, u(y), m(y)): positive g attracts, negative g repels.  On the
grid this becomes a midpoint-rule sum over cell centers, with the cell
containing x contributing zero (the angular average of the unit vector
vanishes there) and the integrand truncated beyond a certified radius.

Built-in strengths:

    degenerate        exp(-r) * u/(1+u)
    degenerate_tanh   exp(-r) * tanh(u)
    moderate_log      u*log(r/u) / (1 - u*log(r/u))
    moderate_alpha    exp(-r) * u*(alpha-u)/(1+u)
    cluster           u/(1+u) * exp(-r^2/R)
    cluster_moderate  u*(alpha-u)/(1+u) * exp(-r^2/R)

All except ``moderate_log`` factor as g1(r)*g2(u), so their drift reduces
to a pair of linear convolutions evaluated with zero-padded FFTs; this is
algebraically identical to the direct sum.  ``moderate_log`` does not
factor: its drift interpolates g in the density argument over a fixed
node ladder (each node is separable), with the interaction strength
clipped to +-log_clip to tame the hyperbola's pole at u*log(r/u) = 1.
Fully custom strengths fall back to a direct (slow) summation unless a
separable pair is supplied.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NoDecayBound, NonFiniteResult
from .grid import GridGeometry, ScalarField, VectorField, require_same_geometry

_NAMED_KINDS = ("degenerate", "degenerate_tanh", "moderate_log", "moderate_alpha", "cluster", "cluster_moderate")

#: fixed density-node ladder for the tabulated (moderate_log) drift path
_TAB_NODES = 64
_TAB_UMAX = 16.0

#: default clip applied to moderate_log inside drift quadrature; the raw
#: formula has a pole at u*log(r/u) = 1 whose grid quadrature is unusable
_LOG_CLIP = 10.0


def _alpha_factor_sup(alpha: float, u_cap: float) -> float:
    """sup over u in [0, u_cap] of |u*(alpha-u)/(1+u)|."""
    candidates = [0.0, u_cap]
    u_star = math.sqrt(1.0 + alpha) - 1.0  # interior critical point of u*(alpha-u)/(1+u)
    if 0.0 < u_star < u_cap:
        candidates.append(u_star)
    return max(abs(u * (alpha - u) / (1.0 + u)) for u in candidates)


@dataclass(frozen=True)
class InteractionKernel:
    """A named interaction strength g(r, u, m) with bound metadata.

    ``decay_bound`` is a constant C with |g| <= C * exp(-r) over distances
    r >= 0 and (scaled) densities in [0, u_cap]; it is filled in per kind
    when not given.  ``moderate_log`` grows logarithmically in r and has
    none.  Custom kernels provide either ``g_full(r, u, m)`` or a
    separable pair ``g_radial(r)`` and ``g_density(u, m)``.

    ``density_scale`` multiplies the density before g sees it.  The unit
    scale treats u as the mass-1 probability density of the mean-field
    limit; scale N reproduces the per-particle kernel sum (mass N), which
    is the regime where saturating interactions visibly aggregate at
    short horizons.  Custom callables also receive the scaled density.
    """

    kind: str
    alpha: float = 1.3
    range_R: float = 0.3
    u_cap: float = 10.0
    decay_bound: float | None = None
    density_scale: float = 1.0
    log_clip: float = _LOG_CLIP
    g_radial: Callable[[np.ndarray], np.ndarray] | None = None
    g_density: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    g_full: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in _NAMED_KINDS and self.kind != "custom":
            raise ValueError(f"unknown kernel kind {self.kind!r}; choices: {_NAMED_KINDS + ('custom',)}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.range_R <= 0:
            raise ValueError("range_R must be positive")
        if self.density_scale <= 0:
            raise ValueError("density_scale must be positive")
        if self.kind == "custom" and self.g_full is None and (self.g_radial is None or self.g_density is None):
            raise ValueError("custom kernel needs g_full or the pair (g_radial, g_density)")
        if self.decay_bound is None:
            object.__setattr__(self, "decay_bound", self._default_decay_bound())

    def _default_decay_bound(self) -> float | None:
        if self.kind in ("degenerate", "degenerate_tanh"):
            return 1.0  # u/(1+u) and tanh(u) are below 1 for every u >= 0
        if self.kind == "moderate_alpha":
            return _alpha_factor_sup(self.alpha, self.u_cap)
        # exp(-r^2/R) <= exp(R/4) * exp(-r) for all r >= 0
        if self.kind == "cluster":
            return math.exp(self.range_R / 4.0)
        if self.kind == "cluster_moderate":
            return math.exp(self.range_R / 4.0) * _alpha_factor_sup(self.alpha, self.u_cap)
        return None  # moderate_log and opaque custom kernels

    @property
    def separable(self) -> bool:
        if self.kind == "custom":
            return self.g_full is None
        return self.kind != "moderate_log"

    def radial_part(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.kind in ("degenerate", "degenerate_tanh", "moderate_alpha"):
            return lambda r: np.exp(-r)
        if self.kind in ("cluster", "cluster_moderate"):
            R = self.range_R
            return lambda r: np.exp(-(r**2) / R)
        if self.kind == "custom" and self.g_radial is not None:
            return self.g_radial
        raise ValueError(f"kernel kind {self.kind!r} has no radial factor")

    def density_part(self) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        """Density factor evaluated on the scaled density ``density_scale * u``."""
        s = self.density_scale
        if self.kind in ("degenerate", "cluster"):
            return lambda u, m: s * u / (1.0 + s * u)
        if self.kind == "degenerate_tanh":
            return lambda u, m: np.tanh(s * u)
        if self.kind in ("moderate_alpha", "cluster_moderate"):
            a = self.alpha
            return lambda u, m: s * u * (a - s * u) / (1.0 + s * u)
        if self.kind == "custom" and self.g_density is not None:
            g2 = self.g_density
            return lambda u, m: g2(s * u, m)
        raise ValueError(f"kernel kind {self.kind!r} has no density factor")

    def cache_key(self):
        if self.kind == "custom":
            # id() is only stable while the callables are alive; custom kernels skip the cache
            return None
        return (self.kind, self.alpha, self.range_R, self.density_scale, self.log_clip)


def _moderate_log_strength(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """u*log(r/u)/(1 - u*log(r/u)) with its continuous limits at u=0 and r=0."""
    r = np.asarray(r, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    r, u = np.broadcast_arrays(r, u)
    out = np.zeros(r.shape)
    pos = u > 0.0
    at_origin = pos & (r == 0.0)
    out[at_origin] = -1.0  # limit of the hyperbola as r -> 0+ with u > 0
    sel = pos & (r > 0.0)
    if np.any(sel):
        x = u[sel] * np.log(r[sel] / u[sel])
        with np.errstate(divide="ignore", invalid="ignore"):
            out[sel] = x / (1.0 - x)
    return out


def eval_g(kernel: InteractionKernel, r, u, m=0.0) -> np.ndarray | float:
    """Interaction strength at distance r, density u, field value m.

    Positive values attract toward the evaluation point, negative repel.
    Raises :class:`NonFiniteResult` if the formula leaves its domain
    (for ``moderate_log`` that is the pole at u*log(r/u) = 1).
    """
    r = np.asarray(r, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if np.any(r < 0) or np.any(u < 0):
        raise ValueError("r and u must be nonnegative")
    scalar = r.ndim == 0 and u.ndim == 0 and m.ndim == 0
    if kernel.kind == "moderate_log":
        out = _moderate_log_strength(r, kernel.density_scale * u)
    elif kernel.kind == "custom" and kernel.g_full is not None:
        out = np.asarray(kernel.g_full(r, kernel.density_scale * u, m), dtype=np.float64)
    else:
        out = kernel.radial_part()(r) * kernel.density_part()(u, m)
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult(f"kernel {kernel.kind!r} produced a non-finite value")
    return float(out) if scalar else out


def bounded_drift(kernel: InteractionKernel, dim: int) -> float:
    """Certified sup bound on the drift magnitude for a decaying kernel.

    Equals C times the integral of exp(-|y|) over R^d, i.e. C * S_{d-1} *
    Gamma(d): 2C in 1d, 2*pi*C in 2d, 8*pi*C in 3d.
    """
    if kernel.decay_bound is None:
        raise NoDecayBound(f"kernel {kernel.kind!r} has no exponential decay envelope")
    sphere = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    return kernel.decay_bound * sphere * math.gamma(dim)


def default_r_cut(kernel: InteractionKernel, geometry: GridGeometry, tail: float = 1e-8) -> float:
    """Truncation radius with certified quadrature tail below ``tail``.

    Exponential envelopes use r_cut = 25 (tail ~ 1e-9 for C = O(1));
    Gaussian envelopes solve exp(-r^2/R) for the same tail.  Kernels with
    no decay get the grid diameter (no truncation).  The result is always
    clamped to the grid diameter.
    """
    diameter = math.sqrt(sum(e**2 for e in geometry.extent)) + max(geometry.spacing)
    if kernel.decay_bound is None:
        return diameter
    if kernel.kind in ("cluster", "cluster_moderate"):
        C = max(kernel.decay_bound, 1.0)
        r = math.sqrt(kernel.range_R * max(math.log(math.pi * kernel.range_R * C / tail), 1.0))
    else:
        r = 25.0
    return min(r, diameter)


# ---------------------------------------------------------------------------
# FFT path: tabulated offset kernels, cached per (geometry, kernel, r_cut)

_kernel_cache: dict = {}
_cache_lock = threading.Lock()


def _padded_shape(cells: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(2 * n for n in cells)


def _offset_mesh(geometry: GridGeometry):
    """Physical offsets z (per axis) on the padded FFT grid, wrap order."""
    pads = _padded_shape(geometry.cells)
    axes = []
    for ax, p in enumerate(pads):
        idx = np.arange(p)
        offs = (idx + p // 2) % p - p // 2  # 0..n-1, -n..-1
        axes.append(offs * geometry.spacing[ax])
    return np.meshgrid(*axes, indexing="ij")


def _radial_offset_kernel_ffts(geometry: GridGeometry, g1: Callable, r_cut: float):
    """rfftn of the vector-valued convolution kernel -z/|z| * g1(|z|) * vol."""
    mesh = _offset_mesh(geometry)
    r2 = sum(z**2 for z in mesh)
    r = np.sqrt(r2)
    mask = (r > 0.0) & (r <= r_cut)
    g1r = np.zeros_like(r)
    g1r[mask] = g1(r[mask])
    vol = geometry.cell_volume
    ffts = []
    inv_r = np.zeros_like(r)
    inv_r[mask] = 1.0 / r[mask]
    for z in mesh:
        comp = -z * inv_r * g1r * vol
        ffts.append(np.fft.rfftn(comp))
    return ffts


def _cached_radial_ffts(geometry: GridGeometry, kernel: InteractionKernel, r_cut: float):
    key = kernel.cache_key()
    if key is None:
        return _radial_offset_kernel_ffts(geometry, kernel.radial_part(), r_cut)
    full_key = ("sep", geometry, key, round(r_cut, 12))
    with _cache_lock:
        hit = _kernel_cache.get(full_key)
    if hit is not None:
        return hit
    ffts = _radial_offset_kernel_ffts(geometry, kernel.radial_part(), r_cut)
    with _cache_lock:
        _kernel_cache[full_key] = ffts
    return ffts


def _tab_nodes() -> np.ndarray:
    p = np.arange(_TAB_NODES + 1, dtype=np.float64)
    return _TAB_UMAX * (p / _TAB_NODES) ** 2  # graded: dense near u = 0


def _cached_tabulated_ffts(geometry: GridGeometry, kernel: InteractionKernel, r_cut: float):
    full_key = ("tab", geometry, kernel.cache_key(), round(r_cut, 12))
    with _cache_lock:
        hit = _kernel_cache.get(full_key)
    if hit is not None:
        return hit
    nodes = _tab_nodes()
    mesh = _offset_mesh(geometry)
    r = np.sqrt(sum(z**2 for z in mesh))
    mask = (r > 0.0) & (r <= r_cut)
    inv_r = np.zeros_like(r)
    inv_r[mask] = 1.0 / r[mask]
    vol = geometry.cell_volume
    clip = kernel.log_clip
    per_node = []
    for v in nodes:
        if v == 0.0:
            per_node.append(None)  # g(r, 0) = 0: contributes nothing
            continue
        g1r = np.zeros_like(r)
        g1r[mask] = np.clip(_moderate_log_strength(r[mask], np.full(mask.sum(), v)), -clip, clip)
        per_node.append([np.fft.rfftn(-z * inv_r * g1r * vol) for z in mesh])
    out = (nodes, per_node)
    with _cache_lock:
        _kernel_cache[full_key] = out
    return out


def _conv_drift(geometry: GridGeometry, weight_field: np.ndarray, kernel_ffts) -> list[np.ndarray]:
    pads = _padded_shape(geometry.cells)
    axes = tuple(range(geometry.dim))
    what = np.fft.rfftn(weight_field, s=pads, axes=axes)
    crop = tuple(slice(0, n) for n in geometry.cells)
    return [np.fft.irfftn(what * kf, s=pads, axes=axes)[crop] for kf in kernel_ffts]


def _drift_separable(u: ScalarField, m: ScalarField, kernel: InteractionKernel, r_cut: float) -> np.ndarray:
    geometry = u.geometry
    ffts = _cached_radial_ffts(geometry, kernel, r_cut)
    g2 = kernel.density_part()(u.values, m.values)
    comps = _conv_drift(geometry, g2, ffts)
    return np.stack(comps, axis=-1)


def _drift_tabulated(u: ScalarField, m: ScalarField, kernel: InteractionKernel, r_cut: float) -> np.ndarray:
    geometry = u.geometry
    nodes, per_node = _cached_tabulated_ffts(geometry, kernel, r_cut)
    uv = np.clip(kernel.density_scale * u.values, 0.0, _TAB_UMAX)
    hi = np.clip(np.searchsorted(nodes, uv, side="right"), 1, len(nodes) - 1)
    lo = hi - 1
    span = nodes[hi] - nodes[lo]
    t = (uv - nodes[lo]) / span
    pads = _padded_shape(geometry.cells)
    acc = None
    for p in range(len(nodes)):
        if per_node[p] is None:
            continue
        wfield = np.where(lo == p, 1.0 - t, 0.0) + np.where(hi == p, t, 0.0)
        if not np.any(wfield):
            continue
        what = np.fft.rfftn(wfield, s=pads, axes=tuple(range(geometry.dim)))
        if acc is None:
            acc = [what * kf for kf in per_node[p]]
        else:
            for ax, kf in enumerate(per_node[p]):
                acc[ax] += what * kf
    crop = tuple(slice(0, n) for n in geometry.cells)
    if acc is None:
        return np.zeros(tuple(geometry.cells) + (geometry.dim,))
    comps = [np.fft.irfftn(a, s=pads, axes=tuple(range(geometry.dim)))[crop] for a in acc]
    return np.stack(comps, axis=-1)


def _drift_direct(u: ScalarField, m: ScalarField, kernel: InteractionKernel, r_cut: float) -> np.ndarray:
    """Direct chunked summation for opaque custom kernels (slow)."""
    geometry = u.geometry
    mesh = geometry.center_mesh()
    pts = np.stack([c.ravel() for c in mesh], axis=-1)  # (G, d)
    uv = u.values.ravel()
    mv = m.values.ravel()
    vol = geometry.cell_volume
    out = np.zeros_like(pts)
    chunk = max(1, 2_000_000 // pts.shape[0])
    for start in range(0, pts.shape[0], chunk):
        x = pts[start : start + chunk]  # (c, d)
        diff = pts[None, :, :] - x[:, None, :]  # y - x: (c, G, d)
        r = np.sqrt((diff**2).sum(axis=-1))
        g = eval_g(kernel, r, np.broadcast_to(uv, r.shape), np.broadcast_to(mv, r.shape))
        g = np.asarray(g, dtype=np.float64)
        g[(r == 0.0) | (r > r_cut)] = 0.0
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[..., None] > 0.0, diff / np.where(r[..., None] > 0.0, r[..., None], 1.0), 0.0)
        out[start : start + chunk] = (unit * g[..., None]).sum(axis=1) * vol
    return out.reshape(tuple(geometry.cells) + (geometry.dim,))


def drift_field(
    u: ScalarField,
    m: ScalarField,
    kernel: InteractionKernel,
    *,
    r_cut: float | None = None,
    method: str = "auto",
) -> VectorField:
    """Aggregation velocity field b(u, m) on the grid of ``u`` and ``m``.

    For each cell center x this is the midpoint-rule sum over cells y != x
    of unit(y - x) * g(|y - x|, u(y), m(y)) * cell_volume, truncated beyond
    ``r_cut`` (defaulting to a radius with certified tail below 1e-8,
    clamped to the grid diameter).  Separable kernels are evaluated by
    zero-padded FFT convolution, identical to the direct sum up to
    transform roundoff; ``method`` may force ``"direct"``.
    """
    require_same_geometry(u, m)
    if r_cut is None:
        r_cut = default_r_cut(kernel, u.geometry)
    if method == "auto":
        if kernel.kind == "moderate_log":
            method = "tabulated"
        elif kernel.separable:
            method = "separable"
        else:
            method = "direct"
    if method == "separable":
        values = _drift_separable(u, m, kernel, r_cut)
    elif method == "tabulated":
        if kernel.kind != "moderate_log":
            raise ValueError("tabulated drift is only defined for the moderate_log kernel")
        values = _drift_tabulated(u, m, kernel, r_cut)
    elif method == "direct":
        values = _drift_direct(u, m, kernel, r_cut)
    else:
        raise ValueError(f"unknown drift method {method!r}")
    return VectorField(u.geometry, values)
