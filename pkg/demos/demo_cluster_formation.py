"""Finite-range attraction makes the population break into clusters.

The cluster kernel u/(1+u) * exp(-r^2/R) only pulls particles together up
to distance ~ sqrt(R).  With R = 0.3 a uniform cloud on the unit-2 square
condenses into local clumps rather than one point; the single-linkage
cluster count tracks how many.

Run:  python demos/demo_cluster_formation.py
"""

from dataclasses import replace

import aggrsim as ag


def main():
    cfg = ag.preset_config("cluster")
    cfg = replace(cfg, snapshot_times=(0.0, 0.5, 1.0, 1.5, 2.0))
    link = ag.default_link_radius(cfg)
    print(f"cluster kernel with R={cfg.kernel.range_R}; linkage radius {link:.3f} "
          f"(= 2x mollifier support radius)")
    record = ag.simulate(cfg)

    print(f"\n{'time':>6} {'clusters':>9} {'mean pairwise':>14}")
    for snap in record.snapshots:
        n = ag.cluster_count(snap.particles, link)
        d = ag.mean_pairwise_distance(snap.particles)
        print(f"{snap.time:6.1f} {n:9d} {d:14.4f}")

    print("\nclusters form because attraction dies off beyond sqrt(R) ~ 0.55:")
    print("distant clumps cannot reach each other, so several survive.")


if __name__ == "__main__":
    main()
