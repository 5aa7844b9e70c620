"""Sparse mmWave downlink channels seen from a square planar array."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PathRealization:
    gain: complex
    elevation: float
    azimuth: float


@dataclass(frozen=True)
class ArrayGeometry:
    side: int
    spacing: float
    free_space_wavenumber: float
    # "literal": 1/M prefactor on the Kronecker product; "unitary": 1/sqrt(M)
    normalization: str = "literal"

    @property
    def num_elements(self) -> int:
        return self.side * self.side

    @classmethod
    def from_config(cls, config) -> "ArrayGeometry":
        return cls(
            side=config.side,
            spacing=config.spacing,
            free_space_wavenumber=config.free_space_wavenumber,
            normalization=config.array_normalization,
        )


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel vectors, stacked as rows of a ``(D, M)`` array."""

    channels: np.ndarray
    scale_factors: np.ndarray

    def __post_init__(self):
        channels = np.array(self.channels, dtype=complex)
        scales = np.array(self.scale_factors, dtype=float)
        if channels.ndim != 2 or channels.shape[0] != scales.shape[0]:
            raise ValueError("channels must be (D, M) with one scale factor per user")
        if not np.all(np.isfinite(channels)):
            raise ValueError("channel entries must be finite")
        if np.any(scales <= 0):
            raise ValueError("scale factors must be strictly positive")
        channels.setflags(write=False)
        scales.setflags(write=False)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "scale_factors", scales)

    @property
    def num_users(self) -> int:
        return self.channels.shape[0]

    @property
    def num_elements(self) -> int:
        return self.channels.shape[1]


def steering_vector_axis(axis: str, elevation: float, azimuth: float, geometry: ArrayGeometry) -> np.ndarray:
    if axis == "x":
        direction = math.sin(elevation) * math.cos(azimuth)
    elif axis == "y":
        direction = math.sin(elevation) * math.sin(azimuth)
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    n = np.arange(geometry.side)
    return np.exp(1j * n * geometry.free_space_wavenumber * geometry.spacing * direction)


def array_response(elevation: float, azimuth: float, geometry: ArrayGeometry) -> np.ndarray:
    """Kronecker product of the x and y steering vectors, normalized.

    Element ``m`` corresponds to x-index ``m // side`` and y-index
    ``m % side``, the ordering ``np.kron`` produces.
    """
    a_x = steering_vector_axis("x", elevation, azimuth, geometry)
    a_y = steering_vector_axis("y", elevation, azimuth, geometry)
    m = geometry.num_elements
    norm = m if geometry.normalization == "literal" else math.sqrt(m)
    return np.kron(a_x, a_y) / norm


def generate_channel(paths: Sequence[PathRealization], geometry: ArrayGeometry, scale: float = 1.0) -> np.ndarray:
    if len(paths) == 0:
        raise ValueError("degenerate channel: at least one propagation path is required")
    m = geometry.num_elements
    h = np.zeros(m, dtype=complex)
    for path in paths:
        h += path.gain * array_response(path.elevation, path.azimuth, geometry)
    return scale * math.sqrt(m / len(paths)) * h


def sample_paths(rng: np.random.Generator, count: int) -> list[PathRealization]:
    """Draw ``count`` paths with CN(0, 1) gains and uniform departure angles."""
    if count < 1:
        raise ValueError("path count must be >= 1")
    gains = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / math.sqrt(2)
    elevations = rng.uniform(0.0, math.pi / 2, count)
    azimuths = rng.uniform(0.0, 2 * math.pi, count)
    return [
        PathRealization(complex(g), float(t), float(p))
        for g, t, p in zip(gains, elevations, azimuths)
    ]


def generate_channel_set(config, rng: np.random.Generator) -> ChannelSet:
    geometry = ArrayGeometry.from_config(config)
    scales = np.asarray(config.scale_factors, dtype=float)
    rows = [
        generate_channel(sample_paths(rng, config.num_paths), geometry, scale)
        for scale in scales
    ]
    return ChannelSet(np.vstack(rows), scales)
