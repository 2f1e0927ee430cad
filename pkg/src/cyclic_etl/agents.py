"""Sender and receiver for the scalar random-walk instance.

The sender's per-sample work (index, prediction, state trigger, gap
buffer, KS p-value, holding counter) runs in :mod:`cyclic_etl.kernels`;
this module handles what happens when learning fires and builds the
message stream. The receiver is a plain :class:`~cyclic_etl.predictor.Predictor`
driven only by messages, so agreement between the two is a real check.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import random_walk_model
from .errors import InsufficientDataError, NoCycleError, ProtocolError
from .kstats import HypotheticalCdf, mc_hypothetical_cdf
from .learning import (DEFAULT_DEGREE, DEFAULT_LAG_RANGE, CompressedModel, DeformParams,
                       compress, deform, estimate_cycle_length, estimate_shift, fit_error,
                       identify_full,
                       reconstruct, refine_params)
from .predictor import ExcitationModel, Predictor, PredictorState
from .protocol import (CommLedger, FullModelUpdate, RawModelUpdate, SmallModelUpdate,
                       StateUpdate)
from .triggers import StateTriggerConfig, TypeTriggerConfig, type_trigger

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EtlParams:
    delta: float = 2.0
    eta: float = 0.05
    t_min: int = 18
    alpha: float = 5.0
    sigma: float = 0.9
    trials: int = 1000
    degree: int = DEFAULT_DEGREE
    lag_range: tuple = DEFAULT_LAG_RANGE
    n_cycles: int = 3
    refine_radius: int = 2
    refine_cycles: int = 2
    escalate_identity: bool = True
    detrend: bool = True
    identify_cycles: int = 4
    seed: int = 0

    def __post_init__(self):
        StateTriggerConfig(self.delta)
        TypeTriggerConfig(self.alpha)

    def hypothetical(self) -> HypotheticalCdf:
        rng = np.random.default_rng(self.seed)
        return mc_hypothetical_cdf(random_walk_model(self.sigma), self.delta, self.trials, rng)

    @property
    def window_capacity(self) -> int:
        hi = self.lag_range[1]
        return max(self.n_cycles * hi, 2 * hi) + 1


DIAG_FIELDS = ("k", "x", "x_hat", "d", "p", "gamma_state", "gamma_learn", "gamma_full",
               "E", "values_sent", "j", "version")


@dataclass
class RunResult:
    messages: list
    diagnostics: dict

    def __len__(self):
        return len(self.diagnostics["k"])


def apply_model_message(model: ExcitationModel, msg) -> ExcitationModel:
    """New model after a model message; identical on both agents."""
    if isinstance(msg, SmallModelUpdate):
        return deform(model, DeformParams(int(msg.theta[0]), int(msg.theta[1])))
    if isinstance(msg, FullModelUpdate):
        return model.replaced(reconstruct(CompressedModel(msg.coefficients, msg.cycle_length)).trajectory)
    if isinstance(msg, RawModelUpdate):
        return model.replaced(np.asarray(msg.values, dtype=float))
    raise ProtocolError(f"not a model message: {msg!r}")


class Sender:
    """Sender of the closed loop.

    ``learning=False`` disables the learning trigger (pure ETSE);
    ``adapt=False`` keeps the trigger and its buffer resets but never
    changes or transmits the model.
    """

    def __init__(self, params: EtlParams | None = None, *, hypothetical: HypotheticalCdf | None = None,
                 model: ExcitationModel | None = None, learning: bool = True, adapt: bool = True,
                 backend: str | None = None):
        self.params = params or EtlParams()
        self.hypothetical = hypothetical if hypothetical is not None else self.params.hypothetical()
        self.kernel = kernels.get_backend(backend)
        self.learning = learning
        self.adapt = adapt
        self.model = model if model is not None else ExcitationModel.zeros()
        self._traj = np.ascontiguousarray(self.model.values, dtype=float)
        self._fstate = np.array([np.nan, 1.0])
        self._istate = np.array([self.model.cycle_length, 0, 0, 0, 0], dtype=np.int64)
        self._table = np.ascontiguousarray(self.hypothetical.table, dtype=float)
        self._counts = np.zeros(self._table.size, dtype=np.int64)
        self._history = np.empty(0)
        self.ledger = CommLedger(1, self.params.degree + 2)
        self.k = 0
        self.learn_events = 0
        self.skipped_learn_events = 0
        self.escalations = 0

    # -- state views -------------------------------------------------------
    @property
    def predictor(self) -> PredictorState:
        x = None if not self._istate[4] else float(self._fstate[0])
        return PredictorState(x, int(self._istate[0]), self.model)

    @property
    def buffer_size(self) -> int:
        return int(self._istate[2])

    @property
    def p(self) -> float:
        return float(self._fstate[1])

    # -- main loop ---------------------------------------------------------
    def step(self, x: float):
        """Process one measurement; returns ``(messages, diagnostics)`` for that sample."""
        res = self.run(np.array([x], dtype=float))
        return res.messages, {name: v[0].item() for name, v in res.diagnostics.items()}

    def run(self, xs) -> RunResult:
        """Process a block of measurements."""
        xs = np.ascontiguousarray(xs, dtype=float)
        n = xs.size
        prm = self.params
        eta = prm.eta if self.learning else -1.0
        k0 = self.k
        x_hat = np.empty(n)
        d = np.empty(n)
        p = np.empty(n)
        gs = np.zeros(n, dtype=np.int8)
        j = np.zeros(n, dtype=np.int64)
        gl = np.zeros(n, dtype=np.int8)
        gf = np.zeros(n, dtype=np.int8)
        err = np.full(n, np.nan)
        version = np.zeros(n, dtype=np.int64)
        sent = np.zeros(n, dtype=np.int64)
        messages = []
        before = self.ledger.values_sent
        pos = 0
        while pos < n:
            fired = self.kernel.scan(xs, pos, n, self._traj, self._fstate, self._istate,
                                     self._counts, self._table, self.hypothetical.size,
                                     prm.delta, eta, prm.t_min, x_hat, d, p, gs, j)
            end = n if fired < 0 else fired + 1
            for idx in (np.flatnonzero(gs[pos:end]) + pos).tolist():
                msg = StateUpdate(k0 + idx, (float(xs[idx]),))
                messages.append(msg)
                self.ledger.record(msg)
                sent[idx] += 1
            version[pos:end] = self.model.version
            if fired >= 0:
                gl[fired] = 1
                msg, error, full = self._learn(xs, fired, k0 + fired)
                err[fired] = error
                gf[fired] = full
                if msg is not None:
                    messages.append(msg)
                    self.ledger.record(msg)
                    sent[fired] += msg.value_count
                    version[fired] = self.model.version
                    j[fired] = self._istate[0]
            pos = end
        cap = prm.window_capacity
        self._history = np.concatenate([self._history, xs])[-cap:]
        self.k += n
        self.ledger.tick(n)
        diag = {
            "k": np.arange(k0, k0 + n, dtype=np.int64), "x": xs.copy(), "x_hat": x_hat, "d": d,
            "p": p, "gamma_state": gs, "gamma_learn": gl, "gamma_full": gf, "E": err,
            "values_sent": before + np.cumsum(sent), "j": j, "version": version,
        }
        return RunResult(messages, diag)

    # -- learning ----------------------------------------------------------
    def _window(self, xs, idx):
        cap = self.params.window_capacity
        recent = xs[max(0, idx + 1 - cap):idx + 1]
        if recent.size < cap and self._history.size:
            recent = np.concatenate([self._history, recent])[-cap:]
        return recent

    def _clear_buffer(self):
        self._counts[:] = 0
        self._istate[2] = 0
        self._istate[3] = 0
        self._fstate[1] = 1.0

    def _learn(self, xs, idx, k):
        """Handle a learning event; returns ``(message or None, E, gamma_full)``."""
        self.learn_events += 1
        if not self.adapt:
            self._clear_buffer()
            return None, np.nan, 0
        window = self._window(xs, idx)
        try:
            msg, new_model, error, full = self._plan_update(window, k)
        except InsufficientDataError as exc:
            # not enough history yet: keep model, index and buffer
            self.skipped_learn_events += 1
            log.debug("learning at k=%d skipped: %s", k, exc)
            return None, np.nan, 0
        self._clear_buffer()
        self.model = new_model
        self._traj = np.ascontiguousarray(new_model.values, dtype=float)
        self._istate[0] = new_model.cycle_length
        return msg, error, full

    def _plan_update(self, window, k):
        prm = self.params
        model = self.model
        lo = prm.lag_range[0]
        identified = model.cycle_length >= lo
        span = prm.n_cycles * model.cycle_length if identified else window.size
        try:
            n_est = estimate_cycle_length(window[-span:], prm.lag_range)
        except NoCycleError:
            if not identified:
                raise InsufficientDataError("no cycle found and no model to fall back on")
            n_est = model.cycle_length
        if window.size < n_est + 1:
            raise InsufficientDataError("window shorter than the estimated cycle")
        if np.any(model.values):
            shift = estimate_shift(window, model, n_est)
            fit = refine_params(window, model, DeformParams(n_est, shift),
                                radius=prm.refine_radius, detrend=prm.detrend,
                                span=prm.refine_cycles * n_est, max_drift=prm.refine_radius)
            theta, error = fit.theta, fit.error
            if prm.escalate_identity and theta == self._identity_theta():
                # the best warp leaves the model as it is, so warping cannot
                # explain the mismatch: re-identify from data instead
                self.escalations += 1
                return self._full_update(window, k, theta.cycle_length, error)
        else:
            # nothing to warp: every deformation of the zero model is the zero model
            theta = DeformParams(n_est)
            error = fit_error(window, np.zeros(n_est), detrend=prm.detrend)
        full = type_trigger(1, error, TypeTriggerConfig(prm.alpha))
        if not full:
            msg = SmallModelUpdate(k, (float(theta.cycle_length), float(theta.shift)))
            return msg, apply_model_message(model, msg), error, 0
        return self._full_update(window, k, n_est, error)

    def _identity_theta(self):
        # deformation that reproduces the current model in its current phase
        n_hat = self.model.cycle_length
        return DeformParams(n_hat, int(-self._istate[0]) % n_hat)

    def _full_update(self, window, k, n_est, error):
        prm = self.params
        model = self.model
        fresh = identify_full(window, n_est, max_cycles=prm.identify_cycles, tolerance=prm.alpha,
                              detrend=prm.detrend)
        cm = compress(fresh, prm.degree)
        if cm is None:
            msg = RawModelUpdate(k, tuple(fresh.values.tolist()), n_est)
        else:
            msg = FullModelUpdate(k, tuple(cm.coefficients.tolist()), n_est)
        return msg, apply_model_message(model, msg), error, 1


class Receiver:
    """Mirrors the sender's predictor from the message stream alone."""

    def __init__(self, model: ExcitationModel | None = None):
        self.predictor = Predictor(random_walk_model(), model)
        self.k = 0

    @property
    def state(self) -> PredictorState:
        return self.predictor.state

    def step(self, messages=()):
        state_msg = None
        model_msg = None
        for m in messages:
            if m.k != self.k:
                raise ProtocolError(f"message for sample {m.k} arrived at sample {self.k}")
            if isinstance(m, StateUpdate):
                if state_msg is not None:
                    raise ProtocolError("two state updates in one sample")
                state_msg = m
            else:
                if model_msg is not None:
                    raise ProtocolError("two model updates in one sample")
                model_msg = m
        meas = None if state_msg is None else state_msg.x[0]
        x_hat = self.predictor.step(meas)
        if model_msg is not None:
            self.predictor.install(apply_model_message(self.predictor.model, model_msg))
        self.k += 1
        return x_hat


@dataclass
class ClosedLoopTrace:
    messages: list
    diagnostics: dict
    receiver_x_hat: np.ndarray
    receiver_j: np.ndarray
    receiver_version: np.ndarray
    ledger: CommLedger = field(repr=False, default=None)

    @property
    def mirrored(self) -> bool:
        dg = self.diagnostics
        return (np.array_equal(dg["x_hat"], self.receiver_x_hat)
                and np.array_equal(dg["j"], self.receiver_j)
                and np.array_equal(dg["version"], self.receiver_version))

    @property
    def error(self) -> np.ndarray:
        return np.abs(self.diagnostics["x"] - self.receiver_x_hat)


def group_by_sample(messages, k0, n):
    out = [[] for _ in range(n)]
    for m in messages:
        out[m.k - k0].append(m)
    return out


def run_closed_loop(xs, sender: Sender | None = None, receiver: Receiver | None = None,
                    params: EtlParams | None = None) -> ClosedLoopTrace:
    """Feed ``xs`` through sender, FIFO channel and receiver in lockstep."""
    sender = sender or Sender(params)
    receiver = receiver or Receiver(sender.model)
    k0 = sender.k
    res = sender.run(xs)
    n = len(res)
    rx = np.empty(n)
    rj = np.empty(n, dtype=np.int64)
    rv = np.empty(n, dtype=np.int64)
    st = receiver.state
    for i, msgs in enumerate(group_by_sample(res.messages, k0, n)):
        rx[i] = receiver.step(msgs)
        rj[i] = st.j
        rv[i] = st.model.version
    return ClosedLoopTrace(res.messages, res.diagnostics, rx, rj, rv, sender.ledger)
