"""Empirical mean-field convergence: the particle density approaches the PDE.

For N in {50, 200, 800} and several seeds, run the particle system from a
smooth bump law and measure the locally-L2 distance to a fine-dt PDE
reference at the final time.  The seed-averaged distance decreases in N;
the study reports means with standard errors.

Run:  python demos/demo_convergence_study.py [n_seeds]
"""

import sys
from dataclasses import replace

import aggrsim as ag


def main():
    n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    base = ag.SimConfig(
        n_particles=100,
        beta=0.5,
        sigma=0.1**0.5,
        dt=1e-3,
        t_end=0.5,
        snapshot_times=(0.0, 0.5),
        geometry=ag.GridGeometry((-1.5, -1.5), (5.0, 5.0), (128, 128)),
        kernel=ag.InteractionKernel("degenerate"),
        initial=ag.InitialLaw("bump", center=(1.0, 1.0), radius=1.0),
        drift_refresh_every=1,
    )
    print("solving the PDE reference...")
    reference = ag.solve_pde(replace(base, dt=2.5e-4))

    ns = [50, 200, 800]
    print(f"running {len(ns)} particle counts x {n_seeds} seeds...")
    report = ag.convergence_study(base, ns, range(n_seeds), reference, jobs=2)

    print(f"\n{'N':>6} {'mean final d':>13} {'std err':>9}")
    for row in report.summary()["per_n"]:
        print(f"{row['n_particles']:>6} {row['mean_final_d_u']:13.4f} {row['stderr_final_d_u']:9.4f}")

    print("\nthe distance is dominated by the kernel-smoothed sampling error,")
    print("which shrinks as the particle count grows: the mean-field limit.")


if __name__ == "__main__":
    main()
