import json
import math

import numpy as np
import pytest

from weightedcs import (DomainError, SNR_CAP_DB, SweepConfig, SweepResult, emit_aggregate_csv,
                        emit_csv, emit_plot_data, read_csv, run_compressible_sweep, run_rho_sweep,
                        run_sparse_sweep, snr_db)
from weightedcs.experiments import PRESETS, preset

SMALL = dict(N=60, k=5, n_values=(24, 30), alpha_values=(0.7,), omega_values=(0.0, 1.0), trials=2)


def test_snr_examples():
    x = np.array([1.0, -2.0, 3.0])
    assert snr_db(x, np.zeros(3)) == 0.0
    assert snr_db(x, x / 2) == pytest.approx(10 * math.log10(4), abs=1e-12)
    assert snr_db(x, x) == SNR_CAP_DB
    with pytest.raises(DomainError):
        snr_db(np.zeros(3), np.zeros(3))


def test_config_validation():
    with pytest.raises(DomainError):
        SweepConfig(trials=0)
    with pytest.raises(DomainError):
        SweepConfig(noise_fraction=-0.1)
    with pytest.raises(DomainError):
        SweepConfig(omega_values=())
    with pytest.raises(DomainError):
        SweepConfig(omega_values=(1.5,))
    with pytest.raises(DomainError):
        run_compressible_sweep(SweepConfig(**SMALL))
    with pytest.raises(DomainError):
        run_rho_sweep(SweepConfig(**SMALL))
    with pytest.raises(DomainError):
        preset("fig99")


def test_sweep_is_byte_deterministic(tmp_path):
    cfg = SweepConfig(**SMALL, noise_mode="relative", noise_fraction=0.05, base_seed=4)
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    emit_csv(run_sparse_sweep(cfg), a)
    emit_csv(run_sparse_sweep(cfg), b)
    emit_csv(run_sparse_sweep(cfg, jobs=2), c)
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    other = tmp_path / "d.csv"
    emit_csv(run_sparse_sweep(SweepConfig(**SMALL, base_seed=5)), other)
    assert other.read_bytes() != a.read_bytes()


def test_csv_schema_and_round_trip(tmp_path):
    res = run_sparse_sweep(SweepConfig(**SMALL))
    p = tmp_path / "r.csv"
    emit_csv(res, p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "n,rho,alpha,omega,trial,snr_db,residual,converged"
    assert len(lines) == 1 + 2 * 2 * 2
    back = read_csv(p)
    agg, agg2 = res.aggregates(), back.aggregates()
    assert agg.keys() == agg2.keys()
    for key in agg:
        assert agg2[key][0] == pytest.approx(agg[key][0], abs=1e-6)
        assert agg2[key][2] == agg[key][2]
    q = tmp_path / "agg.csv"
    emit_aggregate_csv(res, q)
    assert q.read_text().splitlines()[0] == "n,rho,alpha,omega,mean_snr_db,std_snr_db,trials"


def test_empty_result_is_header_only(tmp_path):
    p = tmp_path / "e.csv"
    emit_csv(SweepResult(), p)
    assert p.read_text() == "n,rho,alpha,omega,trial,snr_db,residual,converged\n"
    assert read_csv(p).records == []


def test_aggregates_recompute_from_trials():
    res = run_sparse_sweep(SweepConfig(**SMALL))
    for (n, rho, alpha, omega), (mean, std, cnt) in res.aggregates().items():
        vals = [r.snr_db for r in res.records if (r.n, r.omega) == (n, omega)]
        assert mean == pytest.approx(np.mean(vals), abs=1e-12)
        assert std == pytest.approx(np.std(vals), abs=1e-12)
        assert cnt == len(vals)


def test_plot_data(tmp_path):
    res = run_rho_sweep(SweepConfig(N=60, k=5, n_values=(30,), rho_values=(0.5, 1.0),
                                    alpha_values=(0.5,), omega_values=(0.0, 0.5), trials=1))
    p = tmp_path / "plot.json"
    emit_plot_data(res, p)
    data = json.loads(p.read_text())
    assert data["x_axis"] == "rho"
    assert len(data["series"]) == 2
    assert all(s["x"] == [0.5, 1.0] for s in data["series"])


def test_compressible_sweep_runs():
    cfg = SweepConfig(N=80, k=8, n_values=(30,), alpha_values=(0.5,), omega_values=(0.5,),
                      p_values=(1.5,), trials=2, noise_mode="relative", noise_fraction=0.1)
    res = run_compressible_sweep(cfg)
    assert len(res.records) == 2
    assert all(r.converged for r in res.records)


def test_presets_match_documented_grids():
    kind, cfg = PRESETS["fig4a"]
    assert kind == "sparse" and cfg.N == 500 and cfg.k == 40
    assert tuple(cfg.n_values) == tuple(range(80, 201, 20))
    assert len(cfg.omega_values) == 11 and cfg.trials == 20
    assert PRESETS["fig4b"][1].noise_fraction == 0.05
    for name, p, k in (("fig6b", 1.1, 40), ("fig7b", 1.5, 20), ("fig8b", 2.0, 10)):
        kind, cfg = PRESETS[name]
        assert kind == "compressible" and cfg.p_values == (p,) and cfg.k == k
        assert cfg.noise_fraction == 0.10


@pytest.mark.slow
def test_exact_recovery_regime_with_perfect_estimate():
    cfg = SweepConfig(N=500, k=40, n_values=(200,), alpha_values=(1.0,), omega_values=(0.0,), trials=20)
    res = run_sparse_sweep(cfg, jobs=1)
    assert res.mean_snr(n=200, omega=0.0) >= 100.0


@pytest.mark.slow
def test_larger_estimate_helps_at_high_accuracy():
    cfg = SweepConfig(N=500, k=40, n_values=(100,), rho_values=(0.5, 1.0), alpha_values=(0.7,),
                      omega_values=(0.0,), trials=10)
    res = run_rho_sweep(cfg, jobs=1)
    assert res.mean_snr(rho=1.0) >= res.mean_snr(rho=0.5) - 1.0


@pytest.mark.slow
def test_snr_nonincreasing_in_omega_at_alpha_07():
    kind, cfg = preset("fig4a", alpha_values=(0.7,), trials=20)
    res = run_sparse_sweep(cfg)
    assert all(r.converged for r in res.records)
    bad = []
    for n in cfg.n_values:
        means = [res.mean_snr(n=n, omega=w) for w in cfg.omega_values]
        for w0, w1, m0, m1 in zip(cfg.omega_values, cfg.omega_values[1:], means, means[1:]):
            if m1 > m0 + 1.0:
                bad.append((n, w0, w1, round(m0, 1), round(m1, 1)))
    assert not bad, f"SNR rises with omega at {bad}"
