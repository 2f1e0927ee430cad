"""Model identification for the scalar random-walk instance.

Small update: estimate a new cycle length and circular shift for the
current excitation model (time warp), then refine both locally against
the most recent cycle. Full update: take the last cycle of measured
increments as the new model. Full models travel as Chebyshev coefficients
of a fixed-degree polynomial over the cycle phase.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev

from .errors import ConfigurationError, InsufficientDataError, NoCycleError
from .predictor import ExcitationModel

DEFAULT_DEGREE = 18
DEFAULT_LAG_RANGE = (20, 150)


@dataclass(frozen=True)
class DeformParams:
    cycle_length: int
    shift: int = 0

    def __post_init__(self):
        if int(self.cycle_length) != self.cycle_length or self.cycle_length < 1:
            raise ConfigurationError(f"cycle length must be a positive integer: {self.cycle_length}")
        if int(self.shift) != self.shift or not 0 <= self.shift < self.cycle_length:
            raise ConfigurationError(f"shift must be an integer in [0, {self.cycle_length})")
        object.__setattr__(self, "cycle_length", int(self.cycle_length))
        object.__setattr__(self, "shift", int(self.shift))

    def as_tuple(self):
        return (self.cycle_length, self.shift)


@dataclass(frozen=True, eq=False)
class CompressedModel:
    coefficients: np.ndarray
    cycle_length: int

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "cycle_length", int(self.cycle_length))

    @property
    def value_count(self) -> int:
        return len(self.coefficients) + 1


@dataclass(frozen=True)
class FitReport:
    error: float
    theta: DeformParams
    candidate: ExcitationModel
    score: float = math.nan


def _as_window(window) -> np.ndarray:
    return np.asarray(window, dtype=float).ravel()


def estimate_cycle_length(window, lag_range=DEFAULT_LAG_RANGE, *, min_overlap: float = 0.5,
                          peak_ratio: float = 0.9, noise_floor: float = 0.2) -> int:
    """Cycle length from the autocovariance of the measured increments.

    Lags run over ``lag_range`` as long as at least ``min_overlap * lag``
    increment pairs overlap. Each lag's autocovariance is normalised by the
    energy of the two overlapping stretches, so an exactly periodic signal
    scores 1 at its period. Among local maxima above ``noise_floor`` the
    smallest lag reaching ``peak_ratio`` of the strongest peak wins, which
    keeps multiples of the period from beating the period itself while a
    strong second harmonic (peak near half the period) stays below the bar.
    """
    dx = np.diff(_as_window(window))
    n = dx.size
    if n < 2:
        raise InsufficientDataError("window too short for cycle estimation")
    lo, hi = lag_range
    hi = min(hi, int(n / (1.0 + min_overlap)))
    if hi < lo:
        raise InsufficientDataError(f"{n} increments cannot resolve lags >= {lo}")
    dx = dx - dx.mean()
    var = float(dx @ dx) / n
    if var <= 1e-12 * (1.0 + float(np.abs(dx).max(initial=0.0)) ** 2):
        raise NoCycleError("flat signal has no cycle")
    lags = np.arange(max(1, lo - 1), min(hi + 1, n - 1) + 1)
    sq = np.concatenate([[0.0], np.cumsum(dx * dx)])
    head = sq[n - lags]
    tail = sq[n] - sq[lags]
    r = np.correlate(dx, dx, "full")[n - 1 + lags] / np.sqrt(np.maximum(head * tail, 1e-300))
    peaks = []
    for idx, lag in enumerate(lags):
        if lag < lo or lag > hi:
            continue
        left = r[idx - 1] if idx > 0 else -np.inf
        right = r[idx + 1] if idx + 1 < r.size else -np.inf
        if r[idx] >= left and r[idx] >= right and r[idx] > noise_floor:
            peaks.append((int(lag), float(r[idx])))
    if not peaks:
        raise NoCycleError("no autocovariance peak above the noise floor")
    best = max(v for _, v in peaks)
    first = next(lag for lag, v in peaks if v >= peak_ratio * best)
    # noise splits a broad peak into several local maxima; take the strongest
    # one near the first qualifying lag
    near = [(v, -lag) for lag, v in peaks if first <= lag <= first + max(2, first // 5)]
    return -max(near)[1]


def deform(model: ExcitationModel, theta: DeformParams) -> ExcitationModel:
    """Time-warp the model to ``theta.cycle_length`` samples, then roll by ``theta.shift``.

    Warping resamples the cumulative (angle) trajectory linearly and takes
    differences again, so increments shrink or grow with the cycle length
    and the per-cycle increment sum is preserved.
    """
    vals = model.trajectory
    n_old = vals.shape[1]
    n_new = theta.cycle_length
    if n_new == n_old:
        warped = vals.copy()
    else:
        angle = np.concatenate([np.zeros((vals.shape[0], 1)), np.cumsum(vals, axis=1)], axis=1)
        pos = np.arange(n_new + 1) * (n_old / n_new)
        pos[-1] = n_old
        grid = np.arange(n_old + 1)
        warped = np.diff(np.stack([np.interp(pos, grid, row) for row in angle]), axis=1)
    if theta.shift:
        warped = np.roll(warped, theta.shift, axis=1)
    return model.replaced(warped)


def estimate_shift(window, model: ExcitationModel, n_plus: int) -> int:
    """Circular shift maximising the cross-covariance with the last cycle's increments."""
    x = _as_window(window)
    if x.size < n_plus + 1:
        raise InsufficientDataError("window shorter than one cycle")
    meas = np.diff(x[-(n_plus + 1):])
    w = deform(model, DeformParams(n_plus)).values
    meas = meas - meas.mean()
    w = w - w.mean()
    i = np.arange(n_plus)
    rolled = w[(i[None, :] - i[:, None]) % n_plus]
    score = rolled @ meas
    if not np.any(np.abs(score) > 1e-12 * (1.0 + np.abs(score).max())):
        return 0
    return int(np.argmax(score))


def simulate_cycle(x_start: float, increments) -> np.ndarray:
    """States after applying each increment in turn, noise-free."""
    return np.cumsum(np.concatenate([[x_start], increments]))[1:]


def fit_error(window, candidate, *, span: int | None = None, detrend: bool = True) -> float:
    """RMSE between recent measurements and an open-loop simulation of ``candidate``.

    The simulation covers the last ``span`` samples (default: one candidate
    cycle), starts from the measured state just before them and repeats the
    candidate cyclically so that its last column lands on the newest sample.
    With ``detrend`` the affine part of the residual is removed first: under
    random-walk noise the open-loop residual drifts like the accumulated
    noise, and that drift says nothing about the shape of the excitation.
    """
    cand = candidate.values if isinstance(candidate, ExcitationModel) else np.asarray(candidate, float)
    n = cand.size
    span = n if span is None else int(span)
    x = _as_window(window)
    if span < 1 or x.size < span + 1:
        raise InsufficientDataError(f"window of {x.size} states cannot cover {span} samples")
    if span != n:
        cand = cand[(n - span + np.arange(span)) % n]
    seg = x[-(span + 1):]
    resid = seg[1:] - simulate_cycle(seg[0], cand)
    if detrend and span >= 3:
        t = np.arange(span, dtype=float)
        t -= t.mean()
        resid = resid - resid.mean() - t * (float(t @ resid) / float(t @ t))
    return math.sqrt(float(resid @ resid) / span)


def increment_error(window, candidate, *, span: int | None = None) -> float:
    """RMSE between measured increments and ``candidate`` repeated cyclically.

    Aligned like :func:`fit_error`. Under random-walk noise the increment
    residuals of a correct model are white, so this is the natural score
    for choosing deformation parameters.
    """
    cand = candidate.values if isinstance(candidate, ExcitationModel) else np.asarray(candidate, float)
    n = cand.size
    span = n if span is None else int(span)
    x = _as_window(window)
    if span < 1 or x.size < span + 1:
        raise InsufficientDataError(f"window of {x.size} states cannot cover {span} samples")
    resid = np.diff(x[-(span + 1):]) - cand[(n - span + np.arange(span)) % n]
    return math.sqrt(float(resid @ resid) / span)


def refine_params(window, model: ExcitationModel, theta_init: DeformParams, *, radius: int = 2,
                  max_iter: int = 25, detrend: bool = True, span: int | None = None,
                  max_drift: int | None = None) -> FitReport:
    """Local pattern search over (cycle length, shift) minimising :func:`increment_error`.

    Each round scans a ``(2*radius+1)^2`` neighbourhood (plus the shift
    rescaled to a changed cycle length) and moves only on strict
    improvement, so ``score`` never exceeds the score of ``theta_init``. All
    candidates are scored over the same ``span`` (default one cycle of
    ``theta_init``), so shorter cycles gain no advantage from fitting fewer
    samples. With ``max_drift`` the cycle length stays within that many
    samples of the initial one. The reported ``error`` is :func:`fit_error`
    of the winner over its own last cycle.
    """
    x = _as_window(window)
    span = theta_init.cycle_length if span is None else min(int(span), x.size - 1)
    if x.size < theta_init.cycle_length + 1 or span < 1:
        raise InsufficientDataError("window shorter than the initial cycle length")
    n0 = theta_init.cycle_length
    lo_len, hi_len = 1, 2 * n0
    if max_drift is not None:
        lo_len, hi_len = max(1, n0 - max_drift), min(hi_len, n0 + max_drift)
    dx = np.diff(x[-(span + 1):])
    t = np.arange(span)
    cache: dict = {}

    def errors(n1):
        # one warp per cycle length; every shift of it is scored at once
        if n1 not in cache:
            w = deform(model, DeformParams(n1)).values
            idx = (n1 - span + t[None, :] - np.arange(n1)[:, None]) % n1
            resid = dx[None, :] - w[idx]
            cache[n1] = np.sqrt(np.einsum("ij,ij->i", resid, resid) / span)
        return cache[n1]

    best = theta_init.as_tuple()
    best_e = float(errors(best[0])[best[1]])
    for _ in range(max_iter):
        b1, b2 = best
        improved = False
        # ascending (length, shift) order; ties keep the first candidate
        for n1 in range(max(lo_len, b1 - radius), min(hi_len, b1 + radius) + 1):
            offsets = np.arange(-radius, radius + 1)
            centers = sorted({b2, int(round(b2 * n1 / b1))})
            shifts = np.unique(np.concatenate([(c + offsets) % n1 for c in centers]))
            errs = errors(n1)[shifts]
            i = int(np.argmin(errs))
            if errs[i] < best_e:
                best_e, best, improved = float(errs[i]), (n1, int(shifts[i])), True
        if not improved:
            break
    cand = deform(model, DeformParams(*best))
    span_e = min(cand.cycle_length, x.size - 1)
    return FitReport(fit_error(x, cand, span=span_e, detrend=detrend), DeformParams(*best), cand, best_e)


def identify_full(window, n_plus: int, *, max_cycles: int = 1, tolerance: float | None = None,
                  detrend: bool = True) -> ExcitationModel:
    """Measured increments of the last ``n_plus`` samples as the new excitation cycle.

    With ``max_cycles > 1`` the increments are averaged, phase by phase,
    over up to that many most recent cycles. An earlier cycle joins the
    average only while it is consistent with the newest one: simulating it
    with the newest cycle's increments must give a :func:`fit_error` of at
    most ``tolerance``. Cycles from before a shape change are thereby left out.
    """
    x = _as_window(window)
    if n_plus < 1 or x.size < n_plus + 1:
        raise InsufficientDataError(f"need {n_plus + 1} states, have {x.size}")
    dx = np.diff(x)
    last = dx[-n_plus:]
    cycles = [last]
    for c in range(1, max_cycles):
        stop = dx.size - c * n_plus
        if stop < n_plus:
            break
        prev = dx[stop - n_plus:stop]
        if tolerance is not None:
            states = x[stop - n_plus:stop + 1]
            if fit_error(states, last, detrend=detrend) > tolerance:
                break
        cycles.append(prev)
    if len(cycles) == 1:
        return ExcitationModel(last)
    return ExcitationModel(np.mean(cycles, axis=0))


def _phase_grid(n: int) -> np.ndarray:
    if n == 1:
        return np.array([-1.0])
    return 2.0 * (np.arange(n) / (n - 1)) - 1.0


def compress(model: ExcitationModel, degree: int = DEFAULT_DEGREE):
    """Least-squares Chebyshev fit over the cycle phase.

    Returns ``None`` when the raw cycle should be sent instead: short
    cycles (fewer than ``degree + 2`` samples) or a rank-deficient fit.
    """
    n = model.cycle_length
    if n < degree + 2:
        return None
    grid = _phase_grid(n)
    vander = chebyshev.chebvander(grid, degree)
    coef, _, rank, _ = np.linalg.lstsq(vander, model.values, rcond=None)
    if rank < degree + 1 or not np.all(np.isfinite(coef)):
        warnings.warn("ill-conditioned polynomial fit, sending raw trajectory", stacklevel=2)
        return None
    return CompressedModel(coef, n)


def reconstruct(cm: CompressedModel, version: int = 0) -> ExcitationModel:
    """Evaluate the coefficients on the cycle grid with a fixed Clenshaw recurrence."""
    grid = _phase_grid(cm.cycle_length)
    coef = cm.coefficients
    b1 = np.zeros_like(grid)
    b2 = np.zeros_like(grid)
    for c in coef[:0:-1]:
        b1, b2 = 2.0 * grid * b1 - b2 + c, b1
    values = grid * b1 - b2 + coef[0]
    return ExcitationModel(values, version)
