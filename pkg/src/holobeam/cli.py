"""Command-line client.

Runs the simulator in-process by default; with ``--server URL`` the same
requests are posted to a running ``holobeam serve`` instance.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .config import ConfigError, load_config
from .harness import AggregateStats, ExperimentError, ExperimentRecord, emit_outputs
from .service import (
    GradCheckRequest,
    GradCheckResponse,
    SingleRequest,
    SingleResponse,
    SweepRequest,
    SweepResponse,
    handle_cdf,
    handle_grad_check,
    handle_single,
    handle_sweep_size,
    handle_sweep_snr,
)

_LOCAL = {
    "/single": (handle_single, SingleResponse),
    "/sweep-snr": (handle_sweep_snr, SweepResponse),
    "/sweep-size": (handle_sweep_size, SweepResponse),
    "/cdf": (handle_cdf, SweepResponse),
    "/grad-check": (handle_grad_check, GradCheckResponse),
}


def call(route: str, request, server: str | None):
    handler, response_model = _LOCAL[route]
    if server is None:
        return handler(request)
    import httpx

    resp = httpx.post(server.rstrip("/") + route, json=request.model_dump(), timeout=None)
    if resp.status_code != 200:
        raise click.ClickException(f"server error {resp.status_code}: {resp.text}")
    return response_model.model_validate(resp.json())


def _config_payload(config_path, seed, scheme=None) -> dict:
    overrides = {"seed": seed}
    if scheme in ("proposed", "benchmark"):
        overrides["scheme"] = scheme
    try:
        return load_config(config_path, **overrides).to_flat_dict()
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


def _write(resp: SweepResponse, out: str, fmt: str) -> None:
    stats = [
        AggregateStats(
            s.scheme,
            s.M,
            s.snr_db,
            np.array(s.mean_rate),
            np.array(s.sched_freq),
            s.mean_sum_rate,
            np.array(s.cdf_values),
            np.array(s.cdf_fractions),
        )
        for s in resp.stats
    ]
    records = [
        ExperimentRecord(r.realization, r.scheme, r.M, r.snr_db, np.array(r.rates), np.array(r.schedule), r.config_hash)
        for r in resp.records
    ]
    for path in emit_outputs(stats, out, fmt, records):
        click.echo(f"wrote {path}")


def _summary(resp: SweepResponse) -> None:
    for s in resp.stats:
        click.echo(f"{s.scheme:>9}  M={s.M:<3d} SNR={s.snr_db:5.1f} dB  mean sum rate {s.mean_sum_rate:8.3f} bps/Hz")


def _floats(text):
    return [float(v) for v in text.split(",")] if text else None


def _ints(text):
    return [int(v) for v in text.split(",")] if text else None


common = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Flat YAML config file."),
    click.option("--seed", type=int, default=None, help="Overrides the config seed."),
    click.option("--server", default=None, help="Base URL of a running service."),
]


def with_common(f):
    for opt in reversed(common):
        f = opt(f)
    return f


def sweep_options(f):
    f = click.option("--out", default="results", show_default=True, help="Output directory.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["csv", "plot-script"]), default="csv", show_default=True)(f)
    f = click.option("--scheme", type=click.Choice(["proposed", "benchmark", "both"]), default="both", show_default=True)(f)
    f = click.option("--threads", type=int, default=1, show_default=True, help="Worker processes.")(f)
    return f


@click.group()
@click.version_option(package_name="holobeam")
def main():
    """Holographic beamforming and QoS-aware scheduling simulator."""


@main.command()
@with_common
@click.option("--scheme", type=click.Choice(["proposed", "benchmark"]), default=None)
@click.option("--realization", type=int, default=0, show_default=True)
@click.option("--snr", type=float, default=None, help="Transmit SNR in dB (default: first config point).")
def single(config_path, seed, server, scheme, realization, snr):
    """Solve one channel realization and print the joint solution."""
    req = SingleRequest(config=_config_payload(config_path, seed, scheme), realization=realization, snr_db=snr)
    resp = call("/single", req, server)
    click.echo(json.dumps(resp.model_dump(), indent=2))


@main.command("sweep-snr")
@with_common
@sweep_options
@click.option("--snr", default=None, help="Comma-separated SNR grid in dB.")
@click.option("--sizes", default=None, help="Comma-separated RHS sizes (default: config M).")
def sweep_snr_cmd(config_path, seed, server, out, fmt, scheme, threads, snr, sizes):
    """Average rates, scheduling frequency and sum rate versus SNR."""
    req = SweepRequest(config=_config_payload(config_path, seed), scheme=scheme, snr_db=_floats(snr), sizes=_ints(sizes), threads=threads)
    resp = call("/sweep-snr", req, server)
    _summary(resp)
    _write(resp, out, fmt)


@main.command("sweep-size")
@with_common
@sweep_options
@click.option("--snr", default="10,30", show_default=True, help="Comma-separated SNR points in dB.")
@click.option("--sizes", default="16,25,36,49,64", show_default=True, help="Comma-separated RHS sizes.")
def sweep_size_cmd(config_path, seed, server, out, fmt, scheme, threads, snr, sizes):
    """Average sum rate versus RHS size at fixed SNR points."""
    req = SweepRequest(config=_config_payload(config_path, seed), scheme=scheme, snr_db=_floats(snr), sizes=_ints(sizes), threads=threads)
    resp = call("/sweep-size", req, server)
    _summary(resp)
    _write(resp, out, fmt)


@main.command()
@with_common
@sweep_options
@click.option("--snr", default="10,30", show_default=True)
@click.option("--sizes", default="36,64", show_default=True)
def cdf(config_path, seed, server, out, fmt, scheme, threads, snr, sizes):
    """Empirical sum-rate CDFs per scheme and RHS size."""
    req = SweepRequest(config=_config_payload(config_path, seed), scheme=scheme, snr_db=_floats(snr), sizes=_ints(sizes), threads=threads)
    resp = call("/cdf", req, server)
    _summary(resp)
    _write(resp, out, fmt)


@main.command("grad-check")
@click.option("--instances", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--server", default=None)
def grad_check(instances, seed, server):
    """Check the analytic sum-rate gradient against finite differences."""
    resp = call("/grad-check", GradCheckRequest(instances=instances, seed=seed), server)
    click.echo(f"instances={resp.instances} max_relative_error={resp.max_relative_error:.3e} passed={resp.passed}")
    if not resp.passed:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("holobeam.service:app", host=host, port=port)


def run():
    try:
        main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except (ExperimentError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
