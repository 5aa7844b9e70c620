"""Greedy QoS-constrained user scheduling with joint beamformer updates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .holo_opt import optimize_weights
from .precoder import ZFInfeasibleError, full_precoder, per_user_rates, zero_forcing
from .surface import effective_surface

# (x, w, channels, phi, config, noise_variance) -> (w', V')
WeightUpdate = Callable[..., tuple[np.ndarray, np.ndarray]]


@dataclass
class Admission:
    user: int
    accepted: bool
    sum_rate: float  # sum rate of the kept solution after this candidate
    reason: str = ""


@dataclass
class JointSolution:
    x: np.ndarray
    w: np.ndarray
    V: np.ndarray
    rates: np.ndarray
    initial_rates: np.ndarray = None
    history: list[Admission] = field(default_factory=list)

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rates[self.x == 1]))

    @property
    def scheduled(self) -> list[int]:
        return np.flatnonzero(self.x).tolist()

    def to_record(self) -> dict:
        return {
            "schedule": self.x.astype(int).tolist(),
            "rates": self.rates.tolist(),
            "sum_rate": self.sum_rate,
            "weights": self.w.tolist(),
        }


def initial_rates(channels: np.ndarray, W0: np.ndarray, V0: np.ndarray, noise_variance: float) -> np.ndarray:
    """Rates with every user active, used only to order the candidates."""
    return per_user_rates(channels, W0, V0, np.ones(channels.shape[0], dtype=int), noise_variance)


def _all_active_precoder(channels, W0, p_max):
    """Zero-forcing directions for every user, each column at equal power.

    Sum-power scaling would give every user the same gain and hence the same
    rate, leaving nothing to sort on. Equal per-column power keeps the gain
    proportional to each user's interference-free channel strength.
    """
    H_eff = channels.conj() @ W0
    try:
        V = zero_forcing(H_eff, p_max)
    except ZFInfeasibleError:
        V = np.linalg.pinv(H_eff)
    norms = np.linalg.norm(V, axis=0)
    D = channels.shape[0]
    scale = np.divide(np.sqrt(p_max / D), norms, out=np.zeros_like(norms), where=norms > 0)
    return V * scale


def joint_inner_update(x, w, channels, phi, config, noise_variance):
    """Alternate ZF and holographic ascent for a fixed schedule.

    ZF is computed for the current weights, then each round runs the weight
    ascent against that precoder and re-solves ZF for the new weights. Stops
    after ``config.alternation_rounds`` rounds or once the sum rate moves by
    less than the optimizer tolerance. A round that lowers the sum rate is
    discarded and the previous pair returned.

    Raises
    ------
    ZFInfeasibleError
        If the scheduled users' effective channel is rank deficient.
    """
    x = np.asarray(x)
    V = full_precoder(channels, effective_surface(w, phi), x, config.p_max)
    rate = float(np.sum(per_user_rates(channels, effective_surface(w, phi), V, x, noise_variance)))
    for _ in range(config.alternation_rounds):
        result = optimize_weights(w, channels, phi, V, x, noise_variance, config.optimizer)
        w_new = result.weights
        try:
            V_new = full_precoder(channels, effective_surface(w_new, phi), x, config.p_max)
        except ZFInfeasibleError:
            break
        new_rate = float(np.sum(per_user_rates(channels, effective_surface(w_new, phi), V_new, x, noise_variance)))
        if new_rate < rate:
            break
        w, V, delta, rate = w_new, V_new, new_rate - rate, new_rate
        if delta < config.optimizer.tolerance:
            break
    return w, V


def random_weight_update(rng: np.random.Generator) -> WeightUpdate:
    """Benchmark update: fresh uniform weights per admission, then ZF."""

    def update(x, w, channels, phi, config, noise_variance):
        w = rng.uniform(0.0, 1.0, phi.shape[0])
        return w, full_precoder(channels, effective_surface(w, phi), x, config.p_max)

    return update


def greedy_schedule(channels, phi, config, noise_variance, weight_update: WeightUpdate = joint_inner_update) -> JointSolution:
    """Admit users in descending initial-rate order while every QoS target holds.

    A candidate is tentatively scheduled, the beamformers are re-optimized by
    ``weight_update`` and all scheduled rates recomputed. The admission is
    kept only if every scheduled user reaches ``config.r_min`` and, with
    ``config.require_rate_gain``, the sum rate does not drop; otherwise the
    previous ``(x, w, V)`` is restored untouched. Each candidate is examined
    once.
    """
    H = getattr(channels, "channels", channels)
    D, M = H.shape
    K = phi.shape[1]
    w0 = np.full(M, config.initial_weight)
    W0 = effective_surface(w0, phi)
    first = initial_rates(H, W0, _all_active_precoder(H, W0, config.p_max), noise_variance)
    order = sorted(range(D), key=lambda d: (-first[d], d))

    x = np.zeros(D, dtype=int)
    w = w0
    V = np.zeros((K, D), dtype=complex)
    rates = np.zeros(D)
    history = []
    for d in order:
        kept_rate = float(np.sum(rates[x == 1]))
        if x.sum() >= K:
            history.append(Admission(d, False, kept_rate, "no free feed"))
            continue
        x_try = x.copy()
        x_try[d] = 1
        try:
            w_try, V_try = weight_update(x_try, w, H, phi, config, noise_variance)
        except ZFInfeasibleError:
            history.append(Admission(d, False, kept_rate, "ZF infeasible"))
            continue
        r_try = per_user_rates(H, effective_surface(w_try, phi), V_try, x_try, noise_variance)
        new_rate = float(np.sum(r_try[x_try == 1]))
        if not np.all(r_try[x_try == 1] >= config.r_min):
            history.append(Admission(d, False, kept_rate, "QoS violated"))
        elif config.require_rate_gain and new_rate < kept_rate:
            history.append(Admission(d, False, kept_rate, "sum rate decreased"))
        else:
            x, w, V, rates = x_try, w_try, V_try, r_try
            history.append(Admission(d, True, new_rate))
    return JointSolution(x, w, V, rates, first, history)


def exhaustive_schedule(channels, phi, config, noise_variance) -> JointSolution | None:
    """Best QoS-feasible schedule over all non-empty subsets (tiny instances only).

    Every subset is evaluated with :func:`joint_inner_update` from the
    initial weights.
    """
    H = getattr(channels, "channels", channels)
    D, M = H.shape
    best = None
    for size in range(1, min(D, phi.shape[1]) + 1):
        for subset in itertools.combinations(range(D), size):
            x = np.zeros(D, dtype=int)
            x[list(subset)] = 1
            try:
                w, V = joint_inner_update(x, np.full(M, config.initial_weight), H, phi, config, noise_variance)
            except ZFInfeasibleError:
                continue
            rates = per_user_rates(H, effective_surface(w, phi), V, x, noise_variance)
            if np.all(rates[x == 1] >= config.r_min):
                sol = JointSolution(x, w, V, rates)
                if best is None or sol.sum_rate > best.sum_rate:
                    best = sol
    return best


__all__ = [
    "Admission",
    "JointSolution",
    "exhaustive_schedule",
    "greedy_schedule",
    "initial_rates",
    "joint_inner_update",
    "random_weight_update",
]
