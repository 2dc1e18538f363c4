"""Command-line front end.

Subcommands:

    aggrsim particles  run the stochastic particle system
    aggrsim pde        solve the mean-field PDE-ODE system
    aggrsim study      particle-to-PDE convergence study over (N, seed)
    aggrsim residual   weak-formulation residual of a PDE run

Each takes ``--preset NAME`` or ``--config FILE`` (TOML canonical, JSON
accepted), repeatable ``--set key=value`` overrides, and ``--out DIR``
(default: under $AGGRSIM_OUT or the working directory).  Exit status 0 on
success, 2 for configuration errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import SimConfig, apply_overrides, load_config
from .errors import AggrsimError, ConfigError
from .metrics import BumpTestFunction, weak_residual
from .particles import simulate
from .pde import solve_pde
from .presets import PRESETS, default_link_radius, preset_config
from .runio import write_particle_run, write_pde_run, write_study
from .study import convergence_study


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="config file (TOML or JSON)")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named scenario preset")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted path, repeatable)")
    parser.add_argument("--out", type=Path, default=None, help="output run directory")
    parser.add_argument("--seed", type=int, default=None, help="override the run seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel runs for 'study'")
    parser.add_argument("--paper-times", action="store_true",
                        help="use the long reference snapshot times 0/50/100/150")
    parser.add_argument("--png", action="store_true", help="also render PNG plots (needs matplotlib)")


def _resolve_config(args) -> SimConfig:
    if args.config is not None and args.preset is not None:
        raise ConfigError("give either --config or --preset, not both")
    if args.config is not None:
        config = load_config(args.config)
    elif args.preset is not None:
        config = preset_config(args.preset, paper_times=args.paper_times)
    else:
        raise ConfigError("one of --config or --preset is required")
    config = apply_overrides(config, args.overrides)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def _out_dir(args, default_name: str) -> Path:
    if args.out is not None:
        return args.out
    root = Path(os.environ.get("AGGRSIM_OUT", "."))
    return root / default_name


def _render_png(out: Path, record) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    snap = record.snapshots[-1]
    geo = snap.u.geometry
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(
        snap.u.values.T,
        origin="lower",
        extent=(geo.origin[0], geo.upper[0], geo.origin[1], geo.upper[1]),
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="density")
    if hasattr(snap, "particles"):
        ax.scatter(snap.particles.positions[:, 0], snap.particles.positions[:, 1],
                   s=6, c="white", edgecolors="black", linewidths=0.3)
    ax.set_title(f"t = {snap.time:g}")
    fig.tight_layout()
    fig.savefig(out / "final_state.png", dpi=150)
    plt.close(fig)


def _cmd_particles(args) -> int:
    config = _resolve_config(args)
    record = simulate(config)
    out = _out_dir(args, f"particles_{args.preset or 'run'}_seed{config.seed}")
    write_particle_run(record, out)
    from .clustering import cluster_count

    final = record.snapshots[-1].particles
    n_clusters = cluster_count(final, default_link_radius(config))
    print(f"run directory: {out}")
    print(f"final time {final.time:g}: {n_clusters} cluster(s) at link radius "
          f"{default_link_radius(config):.4g}")
    if args.png:
        _render_png(out, record)
    return 0


def _cmd_pde(args) -> int:
    config = _resolve_config(args)
    record = solve_pde(config)
    out = _out_dir(args, f"pde_{args.preset or 'run'}")
    write_pde_run(record, out)
    print(f"run directory: {out}")
    print(f"mass drift over run: {record.mass_extrema[1] - record.mass_extrema[0]:.3e}")
    if args.png:
        _render_png(out, record)
    return 0


def _cmd_study(args) -> int:
    config = _resolve_config(args)
    ns = [int(x) for x in args.ns.split(",")]
    seeds = list(range(args.n_seeds))
    report = convergence_study(config, ns, seeds, n_max=args.n_balls, jobs=args.jobs)
    out = _out_dir(args, "study")
    write_study(report, config, out)
    print(f"run directory: {out}")
    for row in report.summary()["per_n"]:
        if row.get("runs"):
            print(f"N={row['n_particles']:>6}: final d = {row['mean_final_d_u']:.5f} "
                  f"+- {row['stderr_final_d_u']:.5f} ({row['runs']} seeds)")
    for n, seed, msg in report.failures:
        print(f"FAILED N={n} seed={seed}: {msg}", file=sys.stderr)
    return 0 if not report.failures else 1


def _cmd_residual(args) -> int:
    config = _resolve_config(args)
    record = solve_pde(config)
    geo = config.geometry
    box_center = tuple(o + e / 2 for o, e in zip(geo.origin, geo.extent))
    radius = min(geo.extent) / 3.0
    offsets = [tuple(0.0 for _ in box_center),
               tuple(radius / 4 if ax == 0 else 0.0 for ax in range(geo.dim)),
               tuple(-radius / 4 if ax == 1 % geo.dim else 0.0 for ax in range(geo.dim))]
    results = []
    for k, off in enumerate(offsets):
        phi = BumpTestFunction(tuple(c + o for c, o in zip(box_center, off)), radius)
        value = weak_residual(
            record.times,
            [s.u for s in record.snapshots],
            [s.m for s in record.snapshots],
            phi, config.kernel, config.nu, config.lam, config.zeta,
        )
        results.append({"center": list(phi.center), "radius": radius, "residual": value})
        print(f"test function {k}: residual = {value:.3e}")
    out = _out_dir(args, "residual")
    out.mkdir(parents=True, exist_ok=True)
    (out / "residual.json").write_text(json.dumps(results, indent=1))
    print(f"run directory: {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aggrsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("particles", help="run the stochastic particle system")
    _add_common(p)
    p.set_defaults(func=_cmd_particles)

    p = sub.add_parser("pde", help="solve the mean-field PDE-ODE system")
    _add_common(p)
    p.set_defaults(func=_cmd_pde)

    p = sub.add_parser("study", help="particle-to-PDE convergence study")
    _add_common(p)
    p.add_argument("--ns", default="50,200,800", help="comma-separated particle counts")
    p.add_argument("--n-seeds", type=int, default=8, help="seeds 0..k-1 per particle count")
    p.add_argument("--n-balls", type=int, default=2, help="metric ball count n_max")
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("residual", help="weak residual of a PDE run")
    _add_common(p)
    p.set_defaults(func=_cmd_residual)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except AggrsimError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
