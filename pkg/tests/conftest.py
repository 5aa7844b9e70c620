import numpy as np
import pytest

from holobeam.channel import generate_channel_set
from holobeam.config import SystemConfig
from holobeam.surface import SurfaceGeometry, build_phase_matrix


def make_case(seed=0, **overrides):
    cfg = SystemConfig(**overrides)
    phi = build_phase_matrix(SurfaceGeometry.from_config(cfg))
    channels = generate_channel_set(cfg, np.random.default_rng(seed))
    return cfg, phi, channels.channels


@pytest.fixture
def small_case():
    return make_case(0, num_users=3, num_feeds=3, num_elements=16, r_min=1.0)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per criterion; echoed in the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
