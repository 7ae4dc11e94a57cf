"""Synthetic recovery sweeps for sparse and compressible signals.

Each cell ``(n, rho, alpha, trial)`` draws one measurement matrix, one
signal, one support estimate and one noise vector from a seed derived
from the cell coordinates, then solves the weighted problem for every
``omega`` in the grid. Sharing the instance across ``omega`` makes the
weight comparisons paired; results do not depend on execution order.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .model import (best_k_term, build_weights, gen_compressible_signal,
                    gen_sparse_signal, gen_support_estimate)
from .operators import gaussian_operator
from .solver import SolveOptions, solve_weighted_bpdn

__all__ = [
    "SNR_CAP_DB",
    "SweepConfig",
    "SweepRecord",
    "SweepResult",
    "snr_db",
    "run_sparse_sweep",
    "run_rho_sweep",
    "run_compressible_sweep",
    "emit_csv",
    "emit_aggregate_csv",
    "emit_plot_data",
    "read_csv",
    "PRESETS",
    "preset",
]

SNR_CAP_DB = 300.0

RECORD_COLUMNS = ("n", "rho", "alpha", "omega", "trial", "snr_db", "residual", "converged")
AGGREGATE_COLUMNS = ("n", "rho", "alpha", "omega", "mean_snr_db", "std_snr_db", "trials")


def snr_db(x, x_star) -> float:
    """``10 log10(||x||^2 / ||x - x*||^2)``, capped at 300 dB."""
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    sig = float(np.sum(x**2))
    if sig == 0:
        raise DomainError("SNR is undefined for a zero reference signal")
    err = float(np.sum((x - x_star) ** 2))
    if err == 0:
        return SNR_CAP_DB
    return min(10.0 * math.log10(sig / err), SNR_CAP_DB)


@dataclass(frozen=True)
class SweepConfig:
    N: int = 500
    k: int = 40
    n_values: Sequence[int] = (100,)
    rho_values: Sequence[float] = (1.0,)
    alpha_values: Sequence[float] = (0.5,)
    omega_values: Sequence[float] = (0.0, 0.5, 1.0)
    p_values: Sequence[float] = ()
    noise_mode: str = "noise_free"
    noise_fraction: float = 0.0
    trials: int = 20
    base_seed: int = 0
    solve_options: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.noise_fraction < 0:
            raise DomainError("noise_fraction must be nonnegative")
        if self.noise_mode not in ("noise_free", "relative"):
            raise DomainError(f"unknown noise_mode {self.noise_mode!r}")
        for name in ("n_values", "rho_values", "alpha_values", "omega_values"):
            if len(getattr(self, name)) == 0:
                raise DomainError(f"{name} must be nonempty")
        if any(not 0 <= w <= 1 for w in self.omega_values):
            raise DomainError("omega values must lie in [0, 1]")
        if any(not 0 <= a <= 1 for a in self.alpha_values):
            raise DomainError("alpha values must lie in [0, 1]")
        if any(n < 1 for n in self.n_values):
            raise DomainError("n values must be positive")
        if not 0 <= self.k <= self.N:
            raise DomainError("need 0 <= k <= N")

    @property
    def epsilon_fraction(self) -> float:
        return self.noise_fraction if self.noise_mode == "relative" else 0.0


@dataclass(frozen=True)
class SweepRecord:
    n: int
    rho: float
    alpha: float
    omega: float
    trial: int
    snr_db: float
    residual: float
    converged: bool


@dataclass
class SweepResult:
    records: list = field(default_factory=list)
    x_axis: str = "n"

    def aggregates(self):
        """Per-cell ``(n, rho, alpha, omega) -> (mean, std, trials)``.

        ``std`` is the population standard deviation over trials.
        """
        groups: dict = {}
        for r in self.records:
            groups.setdefault((r.n, r.rho, r.alpha, r.omega), []).append(r.snr_db)
        out = {}
        for key in sorted(groups):
            vals = np.asarray(groups[key])
            out[key] = (float(vals.mean()), float(vals.std()), int(vals.size))
        return out

    def mean_snr(self, **coords) -> float:
        vals = [r.snr_db for r in self.records
                if all(math.isclose(getattr(r, k), v) for k, v in coords.items())]
        if not vals:
            raise KeyError(f"no records match {coords}")
        return float(np.mean(vals))


def _q(v) -> int:
    return int(round(float(v) * 1_000_000))


def _cell_seed(base_seed, n, rho, alpha, trial, p=None):
    entropy = [int(base_seed) & 0xFFFFFFFF, int(n), _q(rho), _q(alpha), int(trial)]
    if p is not None:
        entropy.append(_q(p))
    return np.random.SeedSequence(entropy)


def _run_cell(args):
    cfg, kind, p, n, rho, alpha, trial = args
    seq = _cell_seed(cfg.base_seed, n, rho, alpha, trial, p)
    s_A, s_x, s_T, s_e = seq.spawn(4)
    N, k = cfg.N, cfg.k
    A = gaussian_operator(n, N, s_A)
    if kind == "compressible":
        x = gen_compressible_signal(N, p, s_x)
    else:
        x = gen_sparse_signal(N, k, s_x)
    _, T0 = best_k_term(x, k)
    est = gen_support_estimate(T0, rho, alpha, s_T)
    y = A.matvec(x)
    eps = cfg.epsilon_fraction * float(np.linalg.norm(x))
    if eps > 0:
        e = np.random.default_rng(s_e).standard_normal(n)
        y = y + eps * e / np.linalg.norm(e)
    out = []
    for omega in cfg.omega_values:
        w = build_weights(est.indices, omega, N)
        rep = solve_weighted_bpdn(A, y, w, eps, cfg.solve_options)
        out.append(SweepRecord(n=int(n), rho=float(rho), alpha=float(alpha), omega=float(omega),
                               trial=int(trial), snr_db=snr_db(x, rep.solution),
                               residual=rep.residual_norm, converged=rep.converged))
    return out


def _run(cfg, kind, p, cells, jobs, x_axis):
    tasks = [(cfg, kind, p, n, rho, alpha, t) for (n, rho, alpha, t) in cells]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, tasks))
    else:
        chunks = [_run_cell(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.n, r.rho, r.alpha, r.omega, r.trial))
    return SweepResult(records=records, x_axis=x_axis)


def _grid(cfg):
    return [(n, rho, alpha, t)
            for n in cfg.n_values
            for rho in cfg.rho_values
            for alpha in cfg.alpha_values
            for t in range(cfg.trials)]


def run_sparse_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Mean-SNR grid over ``n`` for exactly k-sparse signals."""
    return _run(cfg, "sparse", None, _grid(cfg), jobs, "n")


def run_rho_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """As :func:`run_sparse_sweep` at a single ``n``, varying ``rho``."""
    if len(cfg.n_values) != 1:
        raise DomainError("a rho sweep uses exactly one value of n")
    return _run(cfg, "sparse", None, _grid(cfg), jobs, "rho")


def run_compressible_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Sweep for signals with power-law decaying magnitudes.

    ``alpha`` is measured against the best ``cfg.k``-term support. One
    decay power per sweep, since the sparsity level of interest depends
    on it.
    """
    if len(cfg.p_values) != 1:
        raise DomainError("a compressible sweep uses exactly one decay power p")
    p = float(cfg.p_values[0])
    if not p > 1:
        raise DomainError(f"decay power p must exceed 1, got {p}")
    x_axis = "rho" if len(cfg.rho_values) > 1 and len(cfg.n_values) == 1 else "n"
    return _run(cfg, "compressible", p, _grid(cfg), jobs, x_axis)


# ---------------------------------------------------------------------------
# output


def _f6(v) -> str:
    return f"{float(v):.6f}"


def _write(path_or_file, text):
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)


def records_csv_text(result: SweepResult) -> str:
    lines = [",".join(RECORD_COLUMNS)]
    for r in result.records:
        lines.append(",".join([
            str(r.n), _f6(r.rho), _f6(r.alpha), _f6(r.omega), str(r.trial),
            _f6(r.snr_db), _f6(r.residual), "1" if r.converged else "0",
        ]))
    return "\n".join(lines) + "\n"


def aggregate_csv_text(result: SweepResult) -> str:
    lines = [",".join(AGGREGATE_COLUMNS)]
    for (n, rho, alpha, omega), (mean, std, cnt) in result.aggregates().items():
        lines.append(",".join([str(n), _f6(rho), _f6(alpha), _f6(omega),
                               _f6(mean), _f6(std), str(cnt)]))
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, path) -> None:
    """Per-trial records: ``n,rho,alpha,omega,trial,snr_db,residual,converged``."""
    _write(path, records_csv_text(result))


def emit_aggregate_csv(result: SweepResult, path) -> None:
    """Per-cell means: ``n,rho,alpha,omega,mean_snr_db,std_snr_db,trials``."""
    _write(path, aggregate_csv_text(result))


def emit_plot_data(result: SweepResult, path) -> None:
    """JSON with one mean-SNR series per ``(alpha, rho or n, omega)``.

    The x axis is ``n`` for measurement sweeps and ``rho`` for
    support-size sweeps.
    """
    xa = result.x_axis
    fixed = "rho" if xa == "n" else "n"
    series: dict = {}
    for (n, rho, alpha, omega), (mean, _, _) in result.aggregates().items():
        coords = {"n": n, "rho": rho}
        key = (alpha, coords[fixed], omega)
        series.setdefault(key, []).append((coords[xa], mean))
    payload = {
        "x_axis": xa,
        "y_axis": "mean_snr_db",
        "series": [
            {"alpha": a, fixed: f, "omega": w,
             "x": [pt[0] for pt in sorted(pts)],
             "y": [round(pt[1], 6) for pt in sorted(pts)]}
            for (a, f, w), pts in sorted(series.items())
        ],
    }
    _write(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")


def read_csv(path_or_text) -> SweepResult:
    """Parse a per-trial CSV written by :func:`emit_csv`."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="", encoding="utf-8")
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != RECORD_COLUMNS:
            raise DomainError(f"unexpected CSV header {header}")
        recs = [SweepRecord(n=int(r[0]), rho=float(r[1]), alpha=float(r[2]), omega=float(r[3]),
                            trial=int(r[4]), snr_db=float(r[5]), residual=float(r[6]),
                            converged=r[7] == "1")
                for r in reader if r]
    return SweepResult(records=recs)


# ---------------------------------------------------------------------------
# presets

_OMEGAS = tuple(round(0.1 * i, 1) for i in range(11))
_ALPHAS = (0.3, 0.5, 0.7)
_RHOS = (0.25, 0.5, 0.75, 1.0, 1.25)

PRESETS = {
    "fig4a": ("sparse", SweepConfig(N=500, k=40, n_values=tuple(range(80, 201, 20)),
                                    alpha_values=_ALPHAS, omega_values=_OMEGAS, trials=20)),
    "fig4b": ("sparse", SweepConfig(N=500, k=40, n_values=tuple(range(80, 201, 20)),
                                    alpha_values=_ALPHAS, omega_values=_OMEGAS, trials=20,
                                    noise_mode="relative", noise_fraction=0.05)),
    "fig5a": ("rho", SweepConfig(N=500, k=40, n_values=(100,), rho_values=_RHOS,
                                 alpha_values=_ALPHAS, omega_values=_OMEGAS, trials=20)),
    "fig5b": ("rho", SweepConfig(N=500, k=40, n_values=(100,), rho_values=_RHOS,
                                 alpha_values=_ALPHAS, omega_values=_OMEGAS, trials=20,
                                 noise_mode="relative", noise_fraction=0.05)),
}
for _name, _p, _k in (("fig6", 1.1, 40), ("fig7", 1.5, 20), ("fig8", 2.0, 10)):
    for _suffix, _mode, _frac in (("a", "noise_free", 0.0), ("b", "relative", 0.10)):
        PRESETS[_name + _suffix] = ("compressible", SweepConfig(
            N=500, k=_k, n_values=(100,), rho_values=_RHOS, alpha_values=_ALPHAS,
            omega_values=_OMEGAS, p_values=(_p,), trials=10,
            noise_mode=_mode, noise_fraction=_frac))


def preset(name: str, **overrides):
    """Return ``(kind, config)`` for a named experiment grid."""
    try:
        kind, cfg = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return kind, replace(cfg, **overrides) if overrides else cfg


def run_kind(kind: str, cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    return {"sparse": run_sparse_sweep, "rho": run_rho_sweep,
            "compressible": run_compressible_sweep}[kind](cfg, jobs=jobs)
