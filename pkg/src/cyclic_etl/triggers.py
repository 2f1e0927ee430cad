"""State-update, learning and learning-type triggers."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class StateTriggerConfig:
    delta: float = 2.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("delta must be > 0")


@dataclass(frozen=True)
class TypeTriggerConfig:
    alpha: float = 5.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigurationError("alpha must be >= 0")


def state_trigger(x, x_pred, cfg: StateTriggerConfig, metric=None):
    """Return ``(gamma_state, d)``; a distance equal to delta triggers."""
    d = abs(x - x_pred) if metric is None else metric(x, x_pred)
    return (1 if d >= cfg.delta else 0), d


@dataclass
class LearnTriggerState:
    """Holding-time counter for the learning trigger.

    Fires once ``p < eta`` has held for ``t_min + 1`` consecutive samples,
    i.e. over the whole closed window ``[k - t_min, k]``.
    """

    eta: float = 0.05
    t_min: int = 18
    below_count: int = 0
    last_p: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigurationError("eta must lie in [0, 1]")
        if int(self.t_min) != self.t_min or self.t_min < 0:
            raise ConfigurationError("t_min must be a non-negative integer (samples)")

    def update(self, p: float) -> int:
        self.last_p = p
        if p < self.eta:
            self.below_count += 1
        else:
            self.below_count = 0
        if self.below_count >= self.t_min + 1:
            self.below_count = 0
            return 1
        return 0


def learn_trigger(state: LearnTriggerState, p: float):
    """Functional form: returns ``(gamma_learn, new_state)`` without mutating ``state``."""
    new = LearnTriggerState(state.eta, state.t_min, state.below_count, state.last_p)
    return new.update(p), new


def type_trigger(gamma_learn: int, error: float, cfg: TypeTriggerConfig) -> int:
    """1 when learning fired and the small update's fit error exceeds alpha."""
    return 1 if gamma_learn and error > cfg.alpha else 0
