"""Run configuration: a strict schema over TOML (canonical) or JSON files.

Every run parameter lives in one :class:`SimConfig`.  Unknown keys are
rejected by name so typos cannot silently fall back to defaults.  The
``--set key=value`` override syntax of the CLI uses dotted paths into the
same schema (e.g. ``kernel.kind=cluster``).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):  # pragma: no cover - version shim
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .grid import GridGeometry
from .interaction import InteractionKernel
from .particles import InitialLaw
from .smoothing import MollifierSpec

_TOP_KEYS = {
    "n_particles", "beta", "sigma", "dt", "t_end", "snapshot_times", "seed",
    "drift_refresh_every", "lambda", "zeta", "bound_m", "m0",
    "geometry", "kernel", "mollifier", "initial",
}
_GEOMETRY_KEYS = {"origin", "extent", "cells"}
_KERNEL_KEYS = {"kind", "alpha", "range_r", "u_cap", "decay_bound", "density_scale", "log_clip"}
_MOLLIFIER_KEYS = {"profile"}
_INITIAL_KEYS = {"law", "low", "high", "center", "radius"}


@dataclass(frozen=True)
class SimConfig:
    """All parameters of a particle or PDE run."""

    n_particles: int = 100
    beta: float = 0.9
    sigma: float = 0.1**0.5  # diffusion coefficient; sigma^2 = 0.1
    dt: float = 1e-4
    t_end: float = 2.0
    snapshot_times: tuple[float, ...] = ()
    geometry: GridGeometry = field(default_factory=lambda: GridGeometry((-2.0, -2.0), (6.0, 6.0), (128, 128)))
    kernel: InteractionKernel = field(default_factory=lambda: InteractionKernel("degenerate"))
    mollifier_profile: str = "bump"
    lam: float = 1.0
    zeta: int = 1
    bound_M: float = 1.0
    m0: float = 1.0
    seed: int = 0
    drift_refresh_every: int = 10
    initial: InitialLaw = field(default_factory=InitialLaw)

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if not 0 < self.beta < 1:
            raise ConfigError("beta must lie strictly in (0, 1)")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if self.drift_refresh_every < 1:
            raise ConfigError("drift_refresh_every must be >= 1")
        if any(t < 0 or t > self.t_end for t in self.snapshot_times):
            raise ConfigError("snapshot_times must lie in [0, t_end]")
        if self.zeta < 1:
            raise ConfigError("zeta must be an integer >= 1")
        if not 0 <= self.m0 <= self.bound_M:
            raise ConfigError("m0 must lie in [0, bound_M]")
        if self.initial.dim != self.geometry.dim:
            raise ConfigError("initial law dimension does not match the grid")

    @property
    def mollifier(self) -> MollifierSpec:
        return MollifierSpec(self.mollifier_profile, self.geometry.dim, self.beta, self.n_particles)

    @property
    def nu(self) -> float:
        """PDE diffusivity: sigma^2 / 2."""
        return 0.5 * self.sigma**2

    def to_dict(self) -> dict[str, Any]:
        kernel: dict[str, Any] = {"kind": self.kernel.kind}
        if self.kernel.kind in ("moderate_alpha", "cluster_moderate"):
            kernel["alpha"] = self.kernel.alpha
        if self.kernel.kind in ("cluster", "cluster_moderate"):
            kernel["range_r"] = self.kernel.range_R
        if self.kernel.kind == "moderate_log":
            kernel["log_clip"] = self.kernel.log_clip
        if self.kernel.density_scale != 1.0:
            kernel["density_scale"] = self.kernel.density_scale
        initial: dict[str, Any] = {"law": self.initial.law}
        if self.initial.law == "uniform":
            initial["low"] = list(self.initial.low)
            initial["high"] = list(self.initial.high)
        else:
            initial["center"] = list(self.initial.center)
            initial["radius"] = self.initial.radius
        return {
            "n_particles": self.n_particles,
            "beta": self.beta,
            "sigma": self.sigma,
            "dt": self.dt,
            "t_end": self.t_end,
            "snapshot_times": list(self.snapshot_times),
            "seed": self.seed,
            "drift_refresh_every": self.drift_refresh_every,
            "lambda": self.lam,
            "zeta": self.zeta,
            "bound_m": self.bound_M,
            "m0": self.m0,
            "geometry": {
                "origin": list(self.geometry.origin),
                "extent": list(self.geometry.extent),
                "cells": list(self.geometry.cells),
            },
            "kernel": kernel,
            "mollifier": {"profile": self.mollifier_profile},
            "initial": initial,
        }


def _reject_unknown(table: dict, allowed: set[str], where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def config_from_dict(data: dict[str, Any]) -> SimConfig:
    """Build a validated SimConfig from a parsed TOML/JSON mapping."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    _reject_unknown(data, _TOP_KEYS, "config")
    geo_tab = data.get("geometry", {})
    _reject_unknown(geo_tab, _GEOMETRY_KEYS, "geometry")
    ker_tab = dict(data.get("kernel", {}))
    _reject_unknown(ker_tab, _KERNEL_KEYS, "kernel")
    mol_tab = data.get("mollifier", {})
    _reject_unknown(mol_tab, _MOLLIFIER_KEYS, "mollifier")
    ini_tab = dict(data.get("initial", {}))
    _reject_unknown(ini_tab, _INITIAL_KEYS, "initial")

    try:
        geometry = GridGeometry(
            tuple(geo_tab.get("origin", (-2.0, -2.0))),
            tuple(geo_tab.get("extent", (6.0, 6.0))),
            tuple(geo_tab.get("cells", (128, 128))),
        )
        if "range_r" in ker_tab:
            ker_tab["range_R"] = ker_tab.pop("range_r")
        kernel = InteractionKernel(ker_tab.pop("kind", "degenerate"), **ker_tab)
        initial = InitialLaw(**ini_tab)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err

    kwargs: dict[str, Any] = {
        "geometry": geometry,
        "kernel": kernel,
        "initial": initial,
        "mollifier_profile": mol_tab.get("profile", "bump"),
    }
    direct = {
        "n_particles": int, "beta": float, "sigma": float, "dt": float, "t_end": float,
        "seed": int, "drift_refresh_every": int, "zeta": int, "m0": float,
    }
    for key, cast in direct.items():
        if key in data:
            kwargs[key] = cast(data[key])
    if "lambda" in data:
        kwargs["lam"] = float(data["lambda"])
    if "bound_m" in data:
        kwargs["bound_M"] = float(data["bound_m"])
    if "snapshot_times" in data:
        kwargs["snapshot_times"] = tuple(float(t) for t in data["snapshot_times"])
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    """Load a config file; TOML is canonical, JSON is accepted by suffix."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
        else:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"cannot parse {path}: {err}") from err
    return config_from_dict(data)


def _parse_override_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw  # bare string


def apply_overrides(config: SimConfig, overrides: list[str]) -> SimConfig:
    """Apply ``key=value`` strings (dotted paths) on top of a config.

    Shortening ``t_end`` without also overriding ``snapshot_times`` drops
    the snapshot times that fall beyond the new horizon (and keeps the new
    horizon itself as the final snapshot).
    """
    if not overrides:
        return config
    data = config.to_dict()
    touched = set()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        touched.add(parts[0])
        node = data
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"override path {key!r} does not name a config table")
            node = node[part]
        node[parts[-1]] = _parse_override_value(raw.strip())
    if "t_end" in touched and "snapshot_times" not in touched:
        t_end = float(data["t_end"])
        kept = [t for t in data.get("snapshot_times", []) if t <= t_end]
        if kept and kept[-1] < t_end:
            kept.append(t_end)
        data["snapshot_times"] = kept
    return config_from_dict(data)
