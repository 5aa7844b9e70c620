"""Monte-Carlo experiments: paired realizations, sweeps, statistics and outputs."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelSet, generate_channel_set
from .config import SystemConfig
from .holo_opt import NumericalFailure
from .scheduler import JointSolution, greedy_schedule, random_weight_update
from .surface import SurfaceGeometry, build_phase_matrix

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "benchmark")
STATS_COLUMNS = ["scheme", "M", "snr_db", "user", "mean_rate", "sched_freq", "mean_sum_rate"]
CDF_COLUMNS = ["scheme", "M", "snr_db", "sum_rate", "cum_frac"]
RECORD_COLUMNS = ["scheme", "M", "snr_db", "realization", "sum_rate", "schedule", "rates", "config_hash"]

# spawn-key streams of one realization
_CHANNEL_STREAM = 0
_BENCHMARK_STREAM = 1


class ExperimentError(RuntimeError):
    pass


@dataclass
class ExperimentRecord:
    realization: int
    scheme: str
    num_elements: int
    snr_db: float
    rates: np.ndarray
    schedule: np.ndarray
    config_hash: str

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates[self.schedule == 1]))


@dataclass
class AggregateStats:
    scheme: str
    num_elements: int
    snr_db: float
    mean_rate: np.ndarray
    sched_freq: np.ndarray
    mean_sum_rate: float
    cdf_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    cdf_fractions: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def key(self) -> tuple[str, int, float]:
        return (self.scheme, self.num_elements, self.snr_db)


def stream_rng(seed: int, realization: int, stream: int) -> np.random.Generator:
    """Generator for one (realization, stream) pair, independent of any other."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(realization, stream)))


def realization_channels(config: SystemConfig, realization: int) -> ChannelSet:
    return generate_channel_set(config, stream_rng(config.seed, realization, _CHANNEL_STREAM))


def benchmark_scheme(channels, phi, config, noise_variance, rng) -> JointSolution:
    """Greedy scheduling with ZF but uniformly random holographic weights."""
    return greedy_schedule(channels, phi, config, noise_variance, random_weight_update(rng))


def solve(channels, phi, config, noise_variance, scheme, realization) -> JointSolution:
    if scheme == "proposed":
        return greedy_schedule(channels, phi, config, noise_variance)
    if scheme == "benchmark":
        rng = stream_rng(config.seed, realization, _BENCHMARK_STREAM)
        return benchmark_scheme(channels, phi, config, noise_variance, rng)
    raise ValueError(f"unknown scheme {scheme!r}")


def run_realization(config: SystemConfig, realization: int, snr_db: float | None = None, scheme: str | None = None) -> tuple[ExperimentRecord, JointSolution]:
    snr_db = config.snr_db[0] if snr_db is None else snr_db
    scheme = scheme or config.scheme
    phi = build_phase_matrix(SurfaceGeometry.from_config(config))
    channels = realization_channels(config, realization)
    try:
        sol = solve(channels, phi, config, config.noise_variance(snr_db), scheme, realization)
    except NumericalFailure as exc:
        raise ExperimentError(f"realization {realization}: {exc}") from exc
    record = ExperimentRecord(
        realization, scheme, config.num_elements, float(snr_db), sol.rates, sol.x, config.digest()
    )
    return record, sol


def _realization_job(args) -> list[ExperimentRecord]:
    config, realization, snr_points, schemes = args
    phi = build_phase_matrix(SurfaceGeometry.from_config(config))
    channels = realization_channels(config, realization)
    digest = config.digest()
    out = []
    for snr in snr_points:
        for scheme in schemes:
            try:
                sol = solve(channels, phi, config, config.noise_variance(snr), scheme, realization)
            except NumericalFailure as exc:
                raise ExperimentError(
                    f"realization {realization} ({scheme}, M={config.num_elements}, {snr} dB): {exc}"
                ) from exc
            out.append(
                ExperimentRecord(realization, scheme, config.num_elements, float(snr), sol.rates, sol.x, digest)
            )
    return out


def run_records(config: SystemConfig, snr_points: Sequence[float], schemes: Sequence[str] = SCHEMES, threads: int = 1) -> list[ExperimentRecord]:
    """All records of ``config.realizations`` channel draws.

    Every scheme and SNR point of a realization sees the same channels.
    Results are returned in (realization, snr, scheme) order whatever the
    number of worker processes.
    """
    jobs = [(config, r, tuple(snr_points), tuple(schemes)) for r in range(config.realizations)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_realization_job, jobs))
    else:
        chunks = [_realization_job(job) for job in jobs]
    return [rec for chunk in chunks for rec in chunk]


def empirical_cdf(sum_rates: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    values = np.sort(np.asarray(list(sum_rates), dtype=float))
    if values.size == 0:
        raise ValueError("empirical CDF needs at least one record")
    return values, np.arange(1, values.size + 1) / values.size


def aggregate(records: Sequence[ExperimentRecord]) -> list[AggregateStats]:
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.scheme, rec.num_elements, rec.snr_db), []).append(rec)
    stats = []
    for (scheme, m, snr), group in sorted(groups.items(), key=lambda kv: (SCHEMES.index(kv[0][0]) if kv[0][0] in SCHEMES else 99, kv[0][1], kv[0][2])):
        rates = np.array([r.rates for r in group])
        schedules = np.array([r.schedule for r in group])
        sums = [r.sum_rate for r in group]
        values, fracs = empirical_cdf(sums)
        stats.append(
            AggregateStats(scheme, m, snr, rates.mean(axis=0), schedules.mean(axis=0), float(np.mean(sums)), values, fracs)
        )
    return stats


def sweep_snr(config: SystemConfig, schemes: Sequence[str] = SCHEMES, threads: int = 1):
    records = run_records(config, config.snr_db, schemes, threads)
    return aggregate(records), records


def sweep_size(config: SystemConfig, sizes: Sequence[int], snr_points: Sequence[float], schemes: Sequence[str] = SCHEMES, threads: int = 1):
    records = []
    for m in sizes:
        records += run_records(config.replace(num_elements=int(m)), snr_points, schemes, threads)
    return aggregate(records), records


def _fmt(value) -> str:
    return repr(float(value))


def emit_outputs(stats: Sequence[AggregateStats], path: str | Path, fmt: str = "csv", records: Sequence[ExperimentRecord] | None = None) -> list[Path]:
    """Write ``stats.csv`` and ``cdf.csv`` (and ``records.csv``) into ``path``.

    ``fmt="plot-script"`` additionally writes ``plot_results.py``, which reads
    the CSVs back and draws rate-versus-SNR, scheduling-frequency and CDF
    figures with matplotlib.
    """
    if fmt not in ("csv", "plot-script"):
        raise ValueError(f"unknown output format {fmt!r}")
    out = Path(path)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        stats_path = out / "stats.csv"
        with stats_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(STATS_COLUMNS)
            for s in stats:
                for d in range(len(s.mean_rate)):
                    writer.writerow(
                        [s.scheme, s.num_elements, _fmt(s.snr_db), d + 1, _fmt(s.mean_rate[d]), _fmt(s.sched_freq[d]), _fmt(s.mean_sum_rate)]
                    )
        written.append(stats_path)
        cdf_path = out / "cdf.csv"
        with cdf_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CDF_COLUMNS)
            for s in stats:
                for v, f in zip(s.cdf_values, s.cdf_fractions):
                    writer.writerow([s.scheme, s.num_elements, _fmt(s.snr_db), _fmt(v), _fmt(f)])
        written.append(cdf_path)
        if records is not None:
            rec_path = out / "records.csv"
            with rec_path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(RECORD_COLUMNS)
                for r in records:
                    writer.writerow(
                        [
                            r.scheme,
                            r.num_elements,
                            _fmt(r.snr_db),
                            r.realization,
                            _fmt(r.sum_rate),
                            "".join(str(int(b)) for b in r.schedule),
                            " ".join(_fmt(v) for v in r.rates),
                            r.config_hash,
                        ]
                    )
            written.append(rec_path)
        if fmt == "plot-script":
            script = out / "plot_results.py"
            script.write_text(PLOT_SCRIPT)
            written.append(script)
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out}: {exc}") from exc
    return written


def read_stats_csv(path: str | Path) -> list[AggregateStats]:
    """Parse ``stats.csv`` (and ``cdf.csv`` next to it, if present)."""
    path = Path(path)
    rows: dict[tuple, list[dict]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != STATS_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (row["scheme"], int(row["M"]), float(row["snr_db"]))
            rows.setdefault(key, []).append(row)
    cdfs: dict[tuple, list[tuple[float, float]]] = {}
    cdf_path = path.with_name("cdf.csv")
    if cdf_path.exists():
        with cdf_path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                key = (row["scheme"], int(row["M"]), float(row["snr_db"]))
                cdfs.setdefault(key, []).append((float(row["sum_rate"]), float(row["cum_frac"])))
    stats = []
    for key, group in rows.items():
        group.sort(key=lambda r: int(r["user"]))
        knots = cdfs.get(key, [])
        stats.append(
            AggregateStats(
                key[0],
                key[1],
                key[2],
                np.array([float(r["mean_rate"]) for r in group]),
                np.array([float(r["sched_freq"]) for r in group]),
                float(group[0]["mean_sum_rate"]),
                np.array([k[0] for k in knots]),
                np.array([k[1] for k in knots]),
            )
        )
    return stats


PLOT_SCRIPT = '''\
"""Redraw the sweep figures from stats.csv and cdf.csv in this directory."""

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    with (HERE / name).open(newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    stats = read("stats.csv")

    # mean sum rate versus SNR, one series per (scheme, M)
    series = defaultdict(dict)
    for row in stats:
        series[(row["scheme"], int(row["M"]))][float(row["snr_db"])] = float(row["mean_sum_rate"])
    fig, ax = plt.subplots()
    for (scheme, m), points in sorted(series.items()):
        snr = sorted(points)
        ax.plot(snr, [points[s] for s in snr], marker="o", label=f"{scheme}, M={m}")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Average sum rate (bps/Hz)")
    ax.grid(True)
    ax.legend()
    fig.savefig(HERE / "sum_rate_vs_snr.png", dpi=150)

    # per-user mean rate and scheduling frequency for the proposed scheme
    for column, label in (("mean_rate", "Average rate (bps/Hz)"), ("sched_freq", "Normalized selection frequency")):
        curves = defaultdict(dict)
        for row in stats:
            if row["scheme"] == "proposed":
                curves[(int(row["M"]), int(row["user"]))][float(row["snr_db"])] = float(row[column])
        if not curves:
            continue
        fig, ax = plt.subplots()
        for (m, user), points in sorted(curves.items()):
            snr = sorted(points)
            ax.plot(snr, [points[s] for s in snr], marker=".", label=f"User {user}, M={m}")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel(label)
        ax.grid(True)
        ax.legend(fontsize="small")
        fig.savefig(HERE / f"per_user_{column}.png", dpi=150)

    cdf_file = HERE / "cdf.csv"
    if cdf_file.exists():
        knots = defaultdict(list)
        for row in read("cdf.csv"):
            knots[(float(row["snr_db"]), row["scheme"], int(row["M"]))].append(
                (float(row["sum_rate"]), float(row["cum_frac"]))
            )
        for snr in sorted({k[0] for k in knots}):
            fig, ax = plt.subplots()
            for (s, scheme, m), pts in sorted(knots.items()):
                if s != snr:
                    continue
                xs, ys = zip(*pts)
                ax.step(xs, ys, where="post", label=f"{scheme}, M={m}")
            ax.set_xlabel("Sum rate (bps/Hz)")
            ax.set_ylabel("CDF")
            ax.set_title(f"SNR = {snr:g} dB")
            ax.grid(True)
            ax.legend()
            fig.savefig(HERE / f"cdf_{snr:g}dB.png", dpi=150)


if __name__ == "__main__":
    main()
'''
