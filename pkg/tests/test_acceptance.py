"""End-to-end acceptance checks at their stated tolerances.

The two full sweeps (M = 36 and M = 64, 100 paired realizations, both
schemes) are computed once per session and shared by the statistical checks.
"""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from holobeam.config import OptimizerSettings, SystemConfig
from holobeam.harness import realization_channels, sweep_snr
from holobeam.holo_opt import GradientWorkspace, optimize_weights, random_instance
from holobeam.precoder import per_user_rates, zero_forcing
from holobeam.scheduler import greedy_schedule, joint_inner_update
from holobeam.surface import SurfaceGeometry, build_phase_matrix, effective_surface

pytestmark = pytest.mark.slow

QOS_SLACK = 1e-9
FREQ_MARGIN = 0.1


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="session")
def sweeps():
    out = {}
    for M in (36, 64):
        stats, records = sweep_snr(SystemConfig(num_elements=M))
        out[M] = ({s.key: s for s in stats}, records)
    return out


def _matrix_sum_rate(w, H, phi, V, x, s2):
    return float(np.sum(per_user_rates(H, effective_surface(w, phi), V, x, s2)))


def test_criterion_1_gradient_oracle(acceptance_report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        D, M, K = int(rng.choice([1, 2, 3])), int(rng.choice([4, 9])), int(rng.choice([2, 3]))
        H, phi, V, x, s2 = random_instance(rng, D, M, K)
        w = rng.uniform(0.05, 0.95, M)
        analytic = GradientWorkspace(H, phi, V, x, s2).at(w).gradient()
        numeric = np.empty(M)
        for m in range(M):
            e = np.zeros(M)
            e[m] = 1e-6
            numeric[m] = (_matrix_sum_rate(w + e, H, phi, V, x, s2) - _matrix_sum_rate(w - e, H, phi, V, x, s2)) / 2e-6
        worst = max(worst, np.max(np.abs(analytic - numeric)) / np.max(np.abs(numeric)))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-5 and elapsed < 10
    acceptance_report(1, ok, f"max relative error {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_zf_contract(acceptance_report):
    rng = np.random.default_rng(102)
    start = time.perf_counter()
    worst_ratio = worst_power = 0.0
    for _ in range(100):
        D = int(rng.integers(1, 7))
        K = D + int(rng.integers(0, 3))
        p_max = float(rng.uniform(0.5, 5.0))
        H = crandn(rng, D, K)
        V = zero_forcing(H, p_max)
        G = H @ V
        diag = np.abs(np.diag(G))
        off = np.abs(G - np.diag(np.diag(G)))
        worst_ratio = max(worst_ratio, off.max() / diag.min())
        worst_power = max(worst_power, abs(np.trace(V @ V.conj().T).real - p_max) / p_max)
    elapsed = time.perf_counter() - start
    ok = worst_ratio < 1e-8 and worst_power < 1e-9 and elapsed < 5
    acceptance_report(2, ok, f"off/diag {worst_ratio:.1e}, power error {worst_power:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_3_monotone_ascent(acceptance_report):
    rng = np.random.default_rng(103)
    monotone = improved = 0
    literal = OptimizerSettings(learning_rate=0.01, backtracking=False)
    for _ in range(100):
        D, M, K = int(rng.choice([1, 2, 3])), int(rng.choice([4, 9])), int(rng.choice([2, 3]))
        H, phi, V, x, s2 = random_instance(rng, D, M, K)
        w0 = np.full(M, 0.5)
        trace = optimize_weights(w0, H, phi, V, x, s2).trace
        monotone += bool(np.all(np.diff(trace) >= 0))
        plain = optimize_weights(w0, H, phi, V, x, s2, literal).trace
        improved += plain[-1] > plain[0]
    ok = monotone == 100 and improved >= 95
    acceptance_report(3, ok, f"monotone with backtracking {monotone}/100, improved without {improved}/100")
    assert ok


def test_criterion_4_qos_audit(sweeps, acceptance_report):
    _, records = sweeps[36]
    scheduled = np.concatenate([r.rates[r.schedule == 1] for r in records])
    worst = float(scheduled.min()) if scheduled.size else float("inf")
    ok = worst >= 5.0 - QOS_SLACK
    acceptance_report(4, ok, f"{len(records)} runs, lowest scheduled rate {worst:.4f} bps/Hz")
    assert ok


def test_criterion_5_benchmark_dominance(sweeps, acceptance_report):
    gaps = []
    for M, (stats, _) in sweeps.items():
        for snr in SystemConfig().snr_db:
            gaps.append(stats["proposed", M, snr].mean_sum_rate - stats["benchmark", M, snr].mean_sum_rate)
    ok = min(gaps) >= 0
    acceptance_report(5, ok, f"smallest proposed-benchmark gap {min(gaps):.3f} bps/Hz over {len(gaps)} points")
    assert ok


def test_criterion_6_size_scaling(sweeps, acceptance_report):
    gains = {snr: sweeps[64][0]["proposed", 64, snr].mean_sum_rate - sweeps[36][0]["proposed", 36, snr].mean_sum_rate for snr in (10.0, 30.0)}
    ok = all(g > 0 for g in gains.values())
    acceptance_report(6, ok, "M=64 minus M=36: " + ", ".join(f"{g:+.3f} at {s:g} dB" for s, g in gains.items()))
    assert ok


def test_criterion_7_channel_quality_ordering(sweeps, acceptance_report):
    lowest = min(SystemConfig().snr_db)
    worst_freq = worst_rate = -np.inf
    for M, (stats, _) in sweeps.items():
        s = stats["proposed", M, lowest]
        worst_freq = max(worst_freq, np.max(np.diff(s.sched_freq)))
        # rates compared on the same 0..1 scale as frequencies
        worst_rate = max(worst_rate, np.max(np.diff(s.mean_rate)) / np.max(s.mean_rate))
    ok = worst_freq <= FREQ_MARGIN and worst_rate <= FREQ_MARGIN
    acceptance_report(7, ok, f"largest increase: frequency {worst_freq:+.3f}, normalized rate {worst_rate:+.3f}")
    assert ok


def test_criterion_8_magnitude(sweeps, acceptance_report):
    value = sweeps[64][0]["proposed", 64, 30.0].mean_sum_rate
    ok = 48.0 <= value <= 112.0
    acceptance_report(8, ok, f"M=64 proposed at 30 dB {value:.2f} bps/Hz (band 48..112)")
    assert ok


def test_criterion_9_small_scheduler_oracle(acceptance_report):
    cfg = SystemConfig(num_users=3, num_feeds=3, num_elements=4)
    phi = build_phase_matrix(SurfaceGeometry.from_config(cfg))
    s2 = cfg.noise_variance(20.0)
    start = time.perf_counter()
    below_single = chain_breaks = infeasible = 0
    for realization in range(20):
        H = realization_channels(cfg, realization).channels
        sol = greedy_schedule(H, phi, cfg, s2)
        if np.any(sol.rates[sol.x == 1] < cfg.r_min - QOS_SLACK):
            infeasible += 1
        kept = [a.sum_rate for a in sol.history]
        chain_breaks += int(np.any(np.diff(kept) < 0))
        best_single = 0.0
        for d in range(3):
            x = np.eye(3, dtype=int)[d]
            w, V = joint_inner_update(x, np.full(4, cfg.initial_weight), H, phi, cfg, s2)
            rate = per_user_rates(H, effective_surface(w, phi), V, x, s2)[d]
            if rate >= cfg.r_min:
                best_single = max(best_single, rate)
        below_single += sol.sum_rate < best_single - QOS_SLACK
    elapsed = time.perf_counter() - start
    ok = infeasible == 0 and chain_breaks == 0 and below_single == 0 and elapsed < 60
    acceptance_report(
        9, ok, f"infeasible {infeasible}, chain breaks {chain_breaks}, below best single user {below_single} of 20, {elapsed:.1f} s"
    )
    assert ok


def test_criterion_10_cli_determinism(tmp_path, acceptance_report):
    config = tmp_path / "small.yaml"
    config.write_text("num_elements: 16\nrealizations: 4\nsnr_db: [10, 30]\n")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cmd = [sys.executable, "-m", "holobeam.cli", "sweep-snr", "--config", str(config), "--seed", "11", "--out", str(out)]
        subprocess.run(cmd, check=True, capture_output=True)
        outputs.append({p.name: p.read_bytes() for p in sorted(Path(out).glob("*.csv"))})
    ok = bool(outputs[0]) and outputs[0] == outputs[1]
    acceptance_report(10, ok, f"{len(outputs[0])} CSV files compared byte for byte")
    assert ok
