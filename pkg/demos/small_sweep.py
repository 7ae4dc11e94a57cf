"""
A quick SNR sweep over the weight
=================================

A cut-down version of the noise-free sparse experiment: five trials per
cell, two measurement counts. Full grids are available through the
``weightedcs sweep-sparse --preset`` command.
"""
import sys

from weightedcs import SweepConfig, run_sparse_sweep, emit_aggregate_csv

cfg = SweepConfig(N=500, k=40, n_values=(80, 120), alpha_values=(0.3, 0.7),
                  omega_values=(0.0, 0.5, 1.0), trials=5, base_seed=7)
result = run_sparse_sweep(cfg)

for alpha in cfg.alpha_values:
    for n in cfg.n_values:
        means = [result.mean_snr(n=n, alpha=alpha, omega=w) for w in cfg.omega_values]
        print(f"alpha={alpha} n={n}: " + "  ".join(f"{m:6.1f}" for m in means))

emit_aggregate_csv(result, sys.stdout)
