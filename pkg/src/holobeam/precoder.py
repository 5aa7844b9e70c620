"""Zero-forcing digital precoding and per-user rates."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .surface import effective_channel

RANK_TOLERANCE = 1e-10


class ZFInfeasibleError(ValueError):
    """The effective channel lacks full row rank, so ZF cannot null interference."""


def zero_forcing(H_eff: np.ndarray, p_max: float) -> np.ndarray:
    """Power-scaled ZF precoder ``(K, D')`` for the stacked rows of ``H_eff``.

    The Gram system ``H H^H`` is solved rather than inverted. Full row rank is
    judged by a relative singular-value cutoff of ``RANK_TOLERANCE``.
    """
    H_eff = np.atleast_2d(np.asarray(H_eff, dtype=complex))
    n_rows, n_cols = H_eff.shape
    if n_rows > n_cols:
        raise ZFInfeasibleError(f"ZF infeasible: {n_rows} streams exceed {n_cols} feeds")
    sv = np.linalg.svd(H_eff, compute_uv=False)
    if sv[0] == 0.0 or not np.all(np.isfinite(sv)) or sv[-1] <= RANK_TOLERANCE * sv[0]:
        raise ZFInfeasibleError("ZF infeasible: effective channel is rank deficient")
    gram = H_eff @ H_eff.conj().T
    V_zf = scipy.linalg.solve(gram, H_eff, assume_a="her").conj().T
    return np.sqrt(p_max / np.sum(np.abs(V_zf) ** 2)) * V_zf


def full_precoder(channels: np.ndarray, W: np.ndarray, x: np.ndarray, p_max: float) -> np.ndarray:
    """ZF precoder laid out as ``(K, D)`` with zero columns for unscheduled users."""
    x = np.asarray(x)
    V = np.zeros((W.shape[1], x.shape[0]), dtype=complex)
    V[:, np.flatnonzero(x)] = zero_forcing(effective_channel(channels, W, x), p_max)
    return V


def link_gains(channels: np.ndarray, W: np.ndarray, V: np.ndarray) -> np.ndarray:
    """``G[d, j] = h_d^H W v_j``: amplitude of stream j at user d."""
    return channels.conj() @ W @ V


def rates_from_gains(G: np.ndarray, x: np.ndarray, noise_variance: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    power = np.abs(G) ** 2 * x[None, :]
    desired = np.diag(power).copy()
    interference = power.sum(axis=1) - desired
    return np.log2(1.0 + desired / (noise_variance + interference))


def per_user_rates(channels: np.ndarray, W: np.ndarray, V: np.ndarray, x: np.ndarray, noise_variance: float) -> np.ndarray:
    """Achievable rate (bps/Hz) of every user; unscheduled users get 0."""
    if not noise_variance > 0:
        raise ValueError("noise variance must be positive")
    return rates_from_gains(link_gains(channels, W, V), x, noise_variance)
