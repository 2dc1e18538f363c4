"""Run-directory output: manifest, particle CSVs, field dumps.

Each run writes one directory containing ``manifest.json`` (kind, config
echo, seed, code version, creation time), per-snapshot particle tables
``particles_t<time>.csv`` with columns id, x1..xd, and per-snapshot field
dumps in the binary-plus-sidecar format of :mod:`aggrsim.grid`.  All
numeric outputs are bit-reproducible for a fixed config and seed; only
the manifest timestamp varies between repeated runs.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .particles import RunRecord
from .pde import PdeRunRecord


def _time_label(t: float) -> str:
    return format(t, ".6g").replace("-", "m").replace(".", "p")


def _write_manifest(out_dir: Path, kind: str, config, extra: dict | None = None) -> None:
    manifest = {
        "kind": kind,
        "code_version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "seed": config.seed,
        "config": config.to_dict(),
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))


def _write_particles_csv(path: Path, positions) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"x{a + 1}" for a in range(positions.shape[1])])
        for i, row in enumerate(positions):
            writer.writerow([i] + [repr(float(x)) for x in row])


def write_particle_run(record: RunRecord, out_dir) -> Path:
    """Dump a particle run record to a directory; returns the directory."""
    from .grid import save_field

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "particles", record.config, {"mass_extrema": list(record.mass_extrema)})
    for snap in record.snapshots:
        label = _time_label(snap.time)
        _write_particles_csv(out / f"particles_t{label}.csv", snap.particles.positions)
        save_field(snap.u, out / f"u_t{label}")
        save_field(snap.m, out / f"m_t{label}")
        save_field(snap.drift, out / f"drift_t{label}")
    return out


def write_pde_run(record: PdeRunRecord, out_dir) -> Path:
    """Dump a PDE run record to a directory; returns the directory."""
    from .grid import save_field

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, "pde", record.config, {"mass_extrema": list(record.mass_extrema)})
    for snap in record.snapshots:
        label = _time_label(snap.time)
        save_field(snap.u, out / f"u_t{label}")
        save_field(snap.m, out / f"m_t{label}")
    return out


def write_study(report, config, out_dir) -> Path:
    """Dump a convergence report (CSV + JSON summary) with a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "report.csv")
    report.summary_json(out / "summary.json")
    _write_manifest(out, "study", config, {"report": "report.csv", "summary": "summary.json"})
    return out
