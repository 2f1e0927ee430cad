"""Twin prediction block: cycle-index bookkeeping and one-step prediction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SystemModel, random_walk_model
from .errors import ConfigurationError, ProtocolError, StateCorruptionError


@dataclass(frozen=True, eq=False)
class ExcitationModel:
    """One cycle of the estimated excitation, shape ``(m, N)``."""

    trajectory: np.ndarray
    version: int = 0

    def __post_init__(self):
        traj = np.array(self.trajectory, dtype=float)
        if traj.ndim == 1:
            traj = traj[np.newaxis, :]
        if traj.ndim != 2 or traj.shape[1] < 1:
            raise ConfigurationError("excitation trajectory must be m x N with N >= 1")
        traj.setflags(write=False)
        object.__setattr__(self, "trajectory", traj)
        if traj.shape[0] == 1:
            cols = tuple(traj[0].tolist())
        else:
            cols = tuple(traj[:, j].copy() for j in range(traj.shape[1]))
        object.__setattr__(self, "_columns", cols)

    @classmethod
    def zeros(cls, input_dim: int = 1, length: int = 1) -> "ExcitationModel":
        return cls(np.zeros((input_dim, length)))

    @property
    def cycle_length(self) -> int:
        return self.trajectory.shape[1]

    @property
    def input_dim(self) -> int:
        return self.trajectory.shape[0]

    @property
    def values(self) -> np.ndarray:
        """The single row of a scalar-input model."""
        return self.trajectory[0]

    def column(self, j: int):
        """1-based column; a float for scalar inputs."""
        return self._columns[j - 1]

    def replaced(self, trajectory) -> "ExcitationModel":
        return ExcitationModel(trajectory, self.version + 1)

    def __eq__(self, other):
        if not isinstance(other, ExcitationModel):
            return NotImplemented
        return (self.version == other.version
                and np.array_equal(self.trajectory, other.trajectory))

    __hash__ = None


def advance_index(j: int, n_hat: int, gamma_learn: int = 0) -> int:
    """Next trajectory index: wraps at ``n_hat`` and restarts after learning."""
    if not 1 <= j <= n_hat:
        raise StateCorruptionError(f"index {j} outside [1, {n_hat}]")
    if gamma_learn or j == n_hat:
        return 1
    return j + 1


@dataclass
class PredictorState:
    """Estimate, index and model; mutated in place by :class:`Predictor`.

    ``x_hat`` is ``None`` until the first state update arrives.
    """

    x_hat: object
    j: int
    model: ExcitationModel

    def snapshot(self):
        x = self.x_hat
        if isinstance(x, np.ndarray):
            x = tuple(x.tolist())
        return (x, self.j, self.model.version)


def predict(state: PredictorState, system: SystemModel):
    """Noise-free prediction from the previous estimate; index must already be advanced."""
    return system.f(state.x_hat, state.model.column(state.j), 0.0)


def commit(state: PredictorState, predicted, measurement=None, gamma_state: int = 0):
    """Return the new estimate: the prediction, or the measurement on a state update."""
    if gamma_state:
        if measurement is None:
            raise ProtocolError("state update without a measurement")
        return measurement
    return predicted


class Predictor:
    """Stateful wrapper used by the receiver (and by tests mirroring the sender)."""

    def __init__(self, system: SystemModel | None = None, model: ExcitationModel | None = None):
        self.system = system or random_walk_model()
        model = model or ExcitationModel.zeros(self.system.input_dim)
        # j = N so that the first advance lands on index 1
        self.state = PredictorState(None, model.cycle_length, model)

    @property
    def model(self) -> ExcitationModel:
        return self.state.model

    def step(self, measurement=None):
        """Advance, predict and commit one sample; returns the new estimate."""
        st = self.state
        st.j = advance_index(st.j, st.model.cycle_length)
        if st.x_hat is None:
            if measurement is None:
                raise ProtocolError("no initial state update received")
            st.x_hat = measurement
            return measurement
        pred = predict(st, self.system)
        st.x_hat = commit(st, pred, measurement, measurement is not None)
        return st.x_hat

    def install(self, model: ExcitationModel) -> None:
        """Adopt a new model; the next used index is 1."""
        self.state.model = model
        self.state.j = model.cycle_length
