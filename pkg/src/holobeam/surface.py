"""Reconfigurable holographic surface: geometry, reference-wave phases, weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SurfaceGeometry:
    side: int
    spacing: float
    feed_positions: np.ndarray  # (K, 2), meters
    surface_wavenumber: float

    def __post_init__(self):
        feeds = np.array(self.feed_positions, dtype=float).reshape(-1, 2)
        if feeds.shape[0] < 1:
            raise ValueError("at least one feed is required")
        if len(np.unique(feeds, axis=0)) != len(feeds):
            raise ValueError("feed positions must be distinct")
        feeds.setflags(write=False)
        object.__setattr__(self, "feed_positions", feeds)

    @property
    def num_elements(self) -> int:
        return self.side * self.side

    @property
    def num_feeds(self) -> int:
        return self.feed_positions.shape[0]

    def element_positions(self) -> np.ndarray:
        """In-plane ``(x, y)`` of every element, shape ``(M, 2)``.

        Element ``m`` sits at x-index ``m // side`` and y-index ``m % side``,
        matching the Kronecker ordering of the array response.
        """
        m = np.arange(self.num_elements)
        return np.column_stack([(m // self.side) * self.spacing, (m % self.side) * self.spacing])

    @classmethod
    def from_config(cls, config) -> "SurfaceGeometry":
        return cls(
            side=config.side,
            spacing=config.spacing,
            feed_positions=edge_feed_positions(config.side, config.spacing, config.num_feeds),
            surface_wavenumber=config.surface_wavenumber,
        )


def edge_feed_positions(side: int, spacing: float, num_feeds: int) -> np.ndarray:
    """Feeds spread evenly along the edge one spacing below the first row."""
    k = np.arange(1, num_feeds + 1)
    x = (k - 0.5) * side * spacing / num_feeds
    return np.column_stack([x, np.full(num_feeds, -spacing)])


def build_phase_matrix(geometry: SurfaceGeometry) -> np.ndarray:
    """Fixed ``(M, K)`` reference-wave phases ``exp(-j |k_s| r_mk)``."""
    elements = geometry.element_positions()
    dist = np.linalg.norm(elements[:, None, :] - geometry.feed_positions[None, :, :], axis=-1)
    phi = np.exp(-1j * geometry.surface_wavenumber * dist)
    phi.setflags(write=False)
    return phi


def check_weights(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("holographic weights must be a vector")
    if not np.all((w >= 0.0) & (w <= 1.0)):
        raise ValueError("holographic weights must lie in [0, 1]")
    return w


def effective_surface(w: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``diag(w) @ phi`` without forming the diagonal matrix."""
    w = np.asarray(w, dtype=float)
    if w.shape != (phi.shape[0],):
        raise ValueError(f"weights of shape {w.shape} do not match phase matrix {phi.shape}")
    return w[:, None] * phi


def effective_channel(channels: np.ndarray, W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows ``h_d^H W`` of the scheduled users, in ascending user order."""
    idx = np.flatnonzero(np.asarray(x))
    if idx.size == 0:
        raise ValueError("no scheduled users")
    return channels[idx].conj() @ W
