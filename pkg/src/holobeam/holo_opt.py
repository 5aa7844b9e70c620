"""Projected gradient ascent on the real holographic weights.

With the digital precoder ``V`` and schedule ``x`` frozen, the stream-j
amplitude at user d is linear in the weights::

    B[d, j] = sum_m w_m * C[d, j, m],   C[d, j, m] = conj(h[d, m]) * (Phi @ V)[m, j]

so the SINR numerator/denominator and their partial derivatives in ``w_m``
follow in closed form, and the sum-rate gradient is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import OptimizerSettings

LN2 = math.log(2.0)


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class GradientWorkspace:
    """Per-element amplitude partials for one fixed ``(V, x)`` pair.

    Only scheduled users enter ``C``: every term of the SINR and its gradient
    carries the factor ``x_j``, so unscheduled streams contribute exactly zero.
    The amplitudes ``B`` are derived from a weight vector on demand via
    :meth:`at`, so a workspace never holds weights that could go stale.
    """

    def __init__(self, channels: np.ndarray, phi: np.ndarray, V: np.ndarray, x: np.ndarray, noise_variance: float):
        if not noise_variance > 0:
            raise ValueError("noise variance must be positive")
        x = np.asarray(x)
        self.num_users = x.shape[0]
        self.num_elements = phi.shape[0]
        self.scheduled = np.flatnonzero(x)
        self.noise_variance = float(noise_variance)
        G = phi @ V[:, self.scheduled]  # (M, D')
        self.C = channels[self.scheduled].conj()[:, None, :] * G.T[None, :, :]

    def at(self, w: np.ndarray) -> "WeightState":
        return WeightState(self, np.asarray(w, dtype=float))


@dataclass
class WeightState:
    """Amplitudes, SINRs and gradients of one workspace at one weight vector."""

    workspace: GradientWorkspace
    w: np.ndarray
    B: np.ndarray = field(init=False)
    num: np.ndarray = field(init=False)
    den: np.ndarray = field(init=False)

    def __post_init__(self):
        self.B = self.workspace.C @ self.w
        power = np.abs(self.B) ** 2
        self.num = np.diag(power).copy()
        self.den = self.workspace.noise_variance + power.sum(axis=1) - self.num

    @property
    def sinr(self) -> np.ndarray:
        """SINR of every user (zeros for unscheduled ones), length D."""
        out = np.zeros(self.workspace.num_users)
        out[self.workspace.scheduled] = self.num / self.den
        return out

    @property
    def sum_rate(self) -> float:
        return float(np.sum(np.log2(1.0 + self.num / self.den)))

    def _partials(self):
        C = self.workspace.C
        # dP[d, j, m] = d|B[d, j]|^2 / dw_m = 2 Re(B[d, j] conj(C[d, j, m]))
        dP = 2.0 * np.real(self.B[:, :, None] * C.conj())
        idx = np.arange(C.shape[0])
        d_num = dP[idx, idx, :]
        d_den = dP.sum(axis=1) - d_num
        return d_num, d_den

    def sinr_gradients(self) -> np.ndarray:
        """``(D, M)`` matrix of dSINR_d / dw_m; zero rows for unscheduled users."""
        d_num, d_den = self._partials()
        den = self.den[:, None]
        grad = (d_num * den - self.num[:, None] * d_den) / den**2
        out = np.zeros((self.workspace.num_users, self.workspace.num_elements))
        out[self.workspace.scheduled] = grad
        return out

    def gradient(self) -> np.ndarray:
        """dR_sum / dw for every element, length M."""
        if self.workspace.scheduled.size == 0:
            return np.zeros(self.workspace.num_elements)
        d_num, d_den = self._partials()
        den = self.den[:, None]
        d_sinr = (d_num * den - self.num[:, None] * d_den) / den**2
        weight = 1.0 / (LN2 * (1.0 + self.num / self.den))
        return weight @ d_sinr


def sinr_of_weights(d: int, w, channels, phi, V, x, noise_variance) -> float:
    if not x[d]:
        return 0.0
    return float(GradientWorkspace(channels, phi, V, x, noise_variance).at(w).sinr[d])


def sinr_gradient(d: int, m: int, state: WeightState) -> float:
    return float(state.sinr_gradients()[d, m])


def sum_rate_gradient(m: int, state: WeightState) -> float:
    return float(state.gradient()[m])


def sum_rate_of_weights(w, channels, phi, V, x, noise_variance) -> float:
    return GradientWorkspace(channels, phi, V, x, noise_variance).at(w).sum_rate


@dataclass
class OptimizationResult:
    weights: np.ndarray
    trace: list[float]
    step_sizes: list[float]

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    def write_trace_csv(self, path: str | Path) -> None:
        path = Path(path)
        try:
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iteration", "sum_rate", "step_size"])
                for t, (rate, step) in enumerate(zip(self.trace, [0.0] + self.step_sizes)):
                    writer.writerow([t, repr(rate), repr(step)])
        except OSError as exc:
            raise OSError(f"cannot write optimizer trace to {path}: {exc}") from exc


def optimize_weights(w0, channels, phi, V, x, noise_variance, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Maximize the sum rate over ``w`` in ``[0, 1]^M`` with ``V`` and ``x`` fixed.

    Each iteration moves every weight along its partial derivative and clips
    to the box. With ``settings.backtracking`` a step that lowers the sum rate
    is retried with the step size halved, at most ``settings.max_halvings``
    times; if none succeeds the current weights are returned. The loop stops
    once the sum-rate change drops below ``settings.tolerance`` or after
    ``settings.max_iterations`` updates.

    Returns
    -------
    OptimizationResult
        Final weights, the sum rate before the first and after every accepted
        step, and the step size used for each accepted step.
    """
    settings = settings or OptimizerSettings()
    workspace = GradientWorkspace(channels, phi, V, x, noise_variance)
    state = workspace.at(np.clip(np.asarray(w0, dtype=float), 0.0, 1.0))
    trace = [state.sum_rate]
    steps: list[float] = []
    if workspace.scheduled.size == 0:
        return OptimizationResult(state.w.copy(), trace, steps)

    for t in range(settings.max_iterations):
        grad = state.gradient()
        if not np.all(np.isfinite(grad)):
            raise NumericalFailure("numerical failure: non-finite gradient", t)
        eta = settings.learning_rate
        halvings = 0
        while True:
            w_new = np.clip(state.w + eta * grad, 0.0, 1.0)
            if np.array_equal(w_new, state.w):
                candidate = None
                break
            candidate = workspace.at(w_new)
            rate = candidate.sum_rate
            if not math.isfinite(rate):
                raise NumericalFailure("numerical failure: non-finite sum rate", t)
            if not settings.backtracking or rate >= trace[-1]:
                break
            if halvings == settings.max_halvings:
                candidate = None
                break
            eta *= 0.5
            halvings += 1
        if candidate is None:
            break
        state = candidate
        trace.append(rate)
        steps.append(eta)
        if abs(trace[-1] - trace[-2]) < settings.tolerance:
            break
    return OptimizationResult(state.w.copy(), trace, steps)


def check_gradients(instances: int = 50, seed: int = 0, step: float = 1e-6) -> dict:
    """Compare the analytic sum-rate gradient against central differences.

    Random instances draw ``D`` from {1, 2, 3}, ``M`` from {4, 9} and ``K``
    from {2, 3} (with ``D <= K``). Weights are kept at least ``step`` away
    from the box so both difference points stay feasible.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        K = int(rng.choice([2, 3]))
        D = int(rng.integers(1, K + 1))
        M = int(rng.choice([4, 9]))
        inst = random_instance(rng, D, M, K)
        workspace = GradientWorkspace(*inst)
        w = rng.uniform(0.05, 0.95, M)
        analytic = workspace.at(w).gradient()
        numeric = np.empty(M)
        for m in range(M):
            e = np.zeros(M)
            e[m] = step
            numeric[m] = (workspace.at(w + e).sum_rate - workspace.at(w - e).sum_rate) / (2 * step)
        scale = max(np.max(np.abs(numeric)), 1e-12)
        worst = max(worst, float(np.max(np.abs(analytic - numeric)) / scale))
    return {"instances": instances, "max_relative_error": worst}


def random_instance(rng: np.random.Generator, D: int, M: int, K: int, scheduled=None):
    """Random complex channels, unit-modulus phases and precoder for tests."""
    channels = (rng.standard_normal((D, M)) + 1j * rng.standard_normal((D, M))) / math.sqrt(2)
    phi = np.exp(1j * rng.uniform(0, 2 * math.pi, (M, K)))
    V = (rng.standard_normal((K, D)) + 1j * rng.standard_normal((K, D))) / math.sqrt(2 * K)
    x = np.ones(D, dtype=int) if scheduled is None else np.asarray(scheduled)
    noise_variance = float(rng.uniform(0.1, 1.0))
    return channels, phi, V, x, noise_variance
