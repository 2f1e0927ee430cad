"""Inter-communication-time statistics and the one-sided two-sample KS test.

Gap counters follow the sender loop literally: the stored value is the
number of non-triggering samples since the previous state update. The
inter-communication time used by the test is that count plus one, i.e.
the distance in samples between two consecutive state updates, so two
back-to-back updates give ``tau = 1``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemModel
from .errors import ConfigurationError, DegenerateDistributionError


@dataclass
class InterCommBuffer:
    gaps: list = field(default_factory=list)
    current_gap: int = 0

    @property
    def times(self) -> list:
        """Inter-communication times ``tau = gap + 1``."""
        return [g + 1 for g in self.gaps]

    def clear(self) -> None:
        self.gaps.clear()

    def __len__(self):
        return len(self.gaps)


def record_sample(buf: InterCommBuffer, gamma_state: int) -> InterCommBuffer:
    if gamma_state:
        buf.gaps.append(buf.current_gap)
        buf.current_gap = 0
    else:
        buf.current_gap += 1
    return buf


class EmpiricalCdf:
    """Right-continuous step function ``#{tau_i <= tau} / i``."""

    def __init__(self, times):
        self.sorted = np.sort(np.asarray(times, dtype=float))

    def __len__(self):
        return len(self.sorted)

    def __call__(self, tau):
        return np.searchsorted(self.sorted, tau, side="right") / len(self.sorted)


def empirical_cdf(times):
    """Empirical CDF of ``times``; ``None`` marks an empty buffer."""
    if len(times) == 0:
        return None
    return EmpiricalCdf(times)


@dataclass(frozen=True, eq=False)
class HypotheticalCdf:
    """Inter-communication-time distribution under a perfect model."""

    sample_pool: np.ndarray

    def __post_init__(self):
        pool = np.sort(np.asarray(self.sample_pool, dtype=np.int64))
        if pool.size == 0 or pool[0] < 1:
            raise ConfigurationError("hypothetical pool must be non-empty with tau >= 1")
        pool.setflags(write=False)
        object.__setattr__(self, "sample_pool", pool)
        top = int(pool[-1])
        table = np.searchsorted(pool, np.arange(top + 1), side="right") / pool.size
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def size(self) -> int:
        return int(self.sample_pool.size)

    @property
    def max_tau(self) -> int:
        return int(self.sample_pool[-1])

    @property
    def expected_tau(self) -> float:
        return float(self.sample_pool.mean())

    def __call__(self, tau):
        return np.searchsorted(self.sample_pool, tau, side="right") / self.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "cdf"])
            for tau in range(1, self.max_tau + 1):
                w.writerow([tau, repr(float(self.table[tau]))])

    def pool_to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "tau"])
            for i, tau in enumerate(self.sample_pool.tolist()):
                w.writerow([i, tau])


def first_passage_times(sigma: float, delta: float, trials: int, rng: np.random.Generator,
                        chunk: int = 32, max_steps: int = 1_000_000) -> np.ndarray:
    """Steps until a Gaussian random walk from 0 first reaches ``|S| >= delta``."""
    if not delta > 0:
        raise ConfigurationError("delta must be > 0")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if sigma <= 0:
        raise DegenerateDistributionError("zero noise never reaches the threshold")
    out = np.zeros(trials, dtype=np.int64)
    pos = np.zeros(trials)
    alive = np.arange(trials)
    steps = 0
    while alive.size:
        if steps >= max_steps:
            raise DegenerateDistributionError(
                f"{alive.size} walks did not reach delta within {max_steps} steps")
        path = pos[alive, None] + np.cumsum(sigma * rng.standard_normal((alive.size, chunk)), axis=1)
        hit = np.abs(path) >= delta
        crossed = hit.any(axis=1)
        first = hit.argmax(axis=1)
        out[alive[crossed]] = steps + first[crossed] + 1
        pos[alive] = path[:, -1]
        alive = alive[~crossed]
        steps += chunk
    return out


def _generic_times(model: SystemModel, delta, trials, rng, excitation, max_steps):
    n = model.state_dim
    zero = 0.0 if n == 1 else np.zeros(n)
    traj = None if excitation is None else np.atleast_2d(np.asarray(excitation, dtype=float))
    out = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        x = xh = zero
        steps = 0
        while True:
            steps += 1
            if steps > max_steps:
                raise DegenerateDistributionError("no state update within max_steps")
            if traj is None:
                u = 0.0 if model.input_dim == 1 else np.zeros(model.input_dim)
            else:
                col = traj[:, (steps - 1) % traj.shape[1]]
                u = float(col[0]) if model.input_dim == 1 else col
            eps = rng.standard_normal(None if model.noise_dim == 1 else model.noise_dim)
            x = model.f(x, u, model.noise_sigma * eps)
            xh = model.f(xh, u, 0.0)
            if model.metric(x, xh) >= delta:
                break
        out[t] = steps
    return out


def mc_hypothetical_cdf(model: SystemModel, delta: float, trials: int = 1000,
                        rng: np.random.Generator | None = None, excitation=None,
                        max_steps: int = 1_000_000) -> HypotheticalCdf:
    """Monte-Carlo inter-communication times of the closed loop with a perfect model.

    Each trial starts right after a state update (zero error) and runs until
    the next one. For the scalar random walk the error is the accumulated
    noise alone, so ``excitation`` is irrelevant and the vectorized
    first-passage sampler is used.
    """
    if not delta > 0:
        raise ConfigurationError("delta must be > 0")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if model.noise_sigma == 0:
        raise DegenerateDistributionError("zero noise: no state update ever occurs")
    rng = rng if rng is not None else np.random.default_rng()
    if model.is_random_walk:
        pool = first_passage_times(model.noise_sigma, delta, trials, rng, max_steps=max_steps)
    else:
        pool = _generic_times(model, delta, trials, rng, excitation, max_steps)
    return HypotheticalCdf(pool)


def ks_one_sided(empirical, hypothetical):
    """One-sided two-sample KS statistic ``D+ = max(F_emp - F_hyp)`` and its p-value.

    Only empirically *shorter* times count as evidence. The p-value is the
    asymptotic ``exp(-2 D+^2 i h / (i + h))``; an empty empirical sample
    returns ``(0.0, 1.0)``.
    """
    hyp = np.sort(np.asarray(hypothetical, dtype=float))
    if hyp.size == 0:
        raise ConfigurationError("hypothetical sample must be non-empty")
    emp = np.sort(np.asarray(empirical, dtype=float))
    i, h = emp.size, hyp.size
    if i == 0:
        return 0.0, 1.0
    support = np.union1d(emp, hyp)
    diff = (np.searchsorted(emp, support, side="right") / i
            - np.searchsorted(hyp, support, side="right") / h)
    dplus = max(0.0, float(diff.max()))
    return dplus, ks_pvalue(dplus, i, h)


def ks_pvalue(dplus: float, i: int, h: int) -> float:
    if i == 0:
        return 1.0
    return math.exp(-2.0 * dplus * dplus * i * h / (i + h))
