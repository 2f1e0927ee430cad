import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclic_etl.dynamics import ScenarioConfig, Segment, excitation_cycle, generate_scenario
from cyclic_etl.errors import ConfigurationError, InsufficientDataError, NoCycleError
from cyclic_etl.learning import (CompressedModel, DeformParams, compress, deform, estimate_cycle_length,
                                 estimate_shift, fit_error, identify_full, increment_error,
                                 refine_params, reconstruct, simulate_cycle)
from cyclic_etl.predictor import ExcitationModel

from .oracles import best_lag, best_shift, lstsq_normal_equations

GAIT50 = excitation_cycle("gait", 50, 40.0)


def _states(increments, x0=0.0):
    return np.concatenate([[x0], x0 + np.cumsum(increments)])


def test_deform_params_validation():
    assert DeformParams(5, 2).as_tuple() == (5, 2)
    for bad in [(0, 0), (5, 5), (5, -1), (2.5, 0)]:
        with pytest.raises(ConfigurationError):
            DeformParams(*bad)


def test_deform_examples():
    m = ExcitationModel([1.0, 2.0, 3.0])
    same = deform(m, DeformParams(3, 0))
    np.testing.assert_array_equal(same.values, m.values)
    assert same.version == m.version + 1
    np.testing.assert_array_equal(deform(m, DeformParams(3, 1)).values, [3.0, 1.0, 2.0])
    w = deform(ExcitationModel([2.0, 4.0]), DeformParams(4, 0)).values
    assert w.size == 4 and w.sum() == pytest.approx(6.0)
    np.testing.assert_allclose(w, [1.0, 1.0, 2.0, 2.0])


@settings(max_examples=60)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.integers(1, 120), st.data())
def test_deform_preserves_sum(vals, n_new, data):
    shift = data.draw(st.integers(0, n_new - 1))
    out = deform(ExcitationModel(vals), DeformParams(n_new, shift)).values
    assert out.size == n_new
    assert abs(out.sum() - sum(vals)) <= 1e-9 * (1 + sum(abs(v) for v in vals))


def test_cycle_length_noise_free_sine():
    u = excitation_cycle("sine", 50, 10.0)
    x = _states(np.tile(u, 3))
    assert estimate_cycle_length(x) == 50
    assert best_lag(list(np.diff(x)), range(20, 100)) == 50


def test_cycle_length_noisy_sine_matches_oracle():
    # a single harmonic has a flat correlation peak, so sigma = 0.9 moves it by a
    # sample or two; the estimate must agree with the brute-force search
    u = excitation_cycle("sine", 50, 40.0)
    agree = within = 0
    for seed in range(40):
        noise = np.random.default_rng(seed).normal(0, 0.9, 150)
        x = _states(np.tile(u, 3) + noise)
        est = estimate_cycle_length(x)
        agree += est == best_lag(list(np.diff(x)), range(20, 76))
        within += abs(est - 50) <= 2
    assert agree >= 38 and within >= 38


@pytest.mark.parametrize("shape, n", [("gait", 50), ("gait", 47), ("drop_foot", 62),
                                      ("stiff_knee", 55), ("dragged_leg", 45)])
def test_cycle_length_gait_shapes(shape, n):
    # strong second harmonics occasionally lock onto half the period
    u = excitation_cycle(shape, n, 40.0)
    hits = 0
    for seed in range(40):
        noise = np.random.default_rng(seed).normal(0, 0.9, 3 * n)
        hits += abs(estimate_cycle_length(_states(np.tile(u, 3) + noise)) - n) <= 1
    assert hits >= 38


def test_cycle_length_errors():
    with pytest.raises(NoCycleError):
        estimate_cycle_length(np.full(200, 3.0))
    with pytest.raises(InsufficientDataError):
        estimate_cycle_length(np.arange(10.0))


def test_estimate_shift_examples():
    model = ExcitationModel(GAIT50)
    x = _states(np.tile(np.roll(GAIT50, 7), 2))
    assert estimate_shift(x, model, 50) == 7
    assert best_shift(list(np.diff(x)[-50:]), list(GAIT50)) == 7
    assert estimate_shift(_states(np.tile(GAIT50, 2)), model, 50) == 0
    assert estimate_shift(x, ExcitationModel(np.zeros(50)), 50) == 0
    with pytest.raises(InsufficientDataError):
        estimate_shift(x[:20], model, 50)


@pytest.mark.parametrize("shift", [0, 3, 18, 41])
def test_estimate_shift_against_oracle(shift):
    model = ExcitationModel(GAIT50)
    meas = np.roll(excitation_cycle("gait", 50, 40.0), shift) + np.random.default_rng(shift).normal(0, 0.3, 50)
    assert estimate_shift(_states(meas), model, 50) == best_shift(list(meas), list(GAIT50))


def test_fit_error_exact_and_misaligned():
    model = ExcitationModel(GAIT50)
    x = _states(np.tile(GAIT50, 2), 5.0)
    assert fit_error(x, model) == pytest.approx(0.0, abs=1e-9)
    assert increment_error(x, model) == pytest.approx(0.0, abs=1e-12)
    assert fit_error(x, np.roll(GAIT50, 5)) > 5
    np.testing.assert_allclose(simulate_cycle(x[-51], GAIT50), x[-50:], atol=1e-9)
    with pytest.raises(InsufficientDataError):
        fit_error(x[:10], model)


def test_fit_error_detrend_removes_drift_only():
    x = _states(np.tile(GAIT50, 2) + 0.1)
    assert fit_error(x, GAIT50, detrend=True) == pytest.approx(0.0, abs=1e-9)
    assert fit_error(x, GAIT50, detrend=False) > 1.0


def test_refine_exact_warp():
    model = ExcitationModel(GAIT50)
    target = deform(model, DeformParams(55, 12))
    x = _states(np.tile(target.values, 3))
    fit = refine_params(x, model, DeformParams(54, 13), span=110)
    assert fit.theta == DeformParams(55, 12)
    assert fit.error == pytest.approx(0.0, abs=1e-9)
    assert fit.score == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(fit.candidate.values, target.values)


def test_refine_max_drift_bounds_cycle_length():
    model = ExcitationModel(GAIT50)
    x = _states(np.tile(deform(model, DeformParams(58, 0)).values, 3))
    free = refine_params(x, model, DeformParams(54, 0), span=116)
    bound = refine_params(x, model, DeformParams(54, 0), span=116, max_drift=2)
    assert free.theta == DeformParams(58, 0)
    assert bound.theta.cycle_length == 56
    assert bound.score > free.score


def test_refine_keeps_optimal_init():
    model = ExcitationModel(GAIT50)
    x = _states(np.tile(np.roll(GAIT50, 9), 2))
    fit = refine_params(x, model, DeformParams(50, 9))
    assert fit.theta == DeformParams(50, 9)


def test_refine_shape_change_exceeds_alpha():
    # gait-scale: 40 degree stride, the model cannot be warped into a different shape
    model = ExcitationModel(GAIT50)
    x = _states(np.tile(excitation_cycle("swapped", 50, 40.0), 3))
    init = DeformParams(50, estimate_shift(x, model, 50))
    assert refine_params(x, model, init).error > 5.0
    y = _states(np.tile(excitation_cycle("stiff_knee", 50, 40.0), 3))
    assert refine_params(y, model, DeformParams(50, estimate_shift(y, model, 50))).error > 5.0


@settings(max_examples=25, deadline=None)
@given(st.integers(30, 70), st.integers(0, 29), st.integers(0, 10_000))
def test_refine_never_worse_than_init(n_true, s_init, seed):
    rng = np.random.default_rng(seed)
    model = ExcitationModel(GAIT50)
    meas = np.tile(excitation_cycle("gait", n_true, 40.0), 3) + rng.normal(0, 0.9, 3 * n_true)
    x = _states(meas)
    init = DeformParams(50, s_init)
    fit = refine_params(x, model, init)
    assert fit.score <= increment_error(x, deform(model, init), span=50) + 1e-12
    assert np.isfinite(fit.error) and fit.error >= 0


def test_refine_needs_a_cycle():
    with pytest.raises(InsufficientDataError):
        refine_params(np.zeros(10), ExcitationModel(GAIT50), DeformParams(50, 0))


def test_identify_full_examples():
    np.testing.assert_array_equal(identify_full([0, 1, 3, 6], 3).values, [1, 2, 3])
    np.testing.assert_array_equal(identify_full(np.full(20, 4.0), 10).values, np.zeros(10))
    with pytest.raises(InsufficientDataError):
        identify_full([0, 1, 2], 3)


def test_identify_full_recovers_true_input():
    sc = generate_scenario(ScenarioConfig((Segment(200, 50, "drop_foot"),), noise_sigma=0.0))
    est = identify_full(sc.x, 50)
    np.testing.assert_allclose(est.values, sc.u[-50:], atol=1e-9)
    np.testing.assert_allclose(simulate_cycle(sc.x[-51], est.values), sc.x[-50:], atol=1e-9)


def test_identify_full_averaging_respects_tolerance():
    rng = np.random.default_rng(0)
    old = excitation_cycle("gait", 50, 40.0)
    new = excitation_cycle("stiff_knee", 50, 40.0)
    noisy = np.concatenate([np.tile(old, 2), np.tile(new, 3)]) + rng.normal(0, 0.9, 250)
    x = _states(noisy)
    single = identify_full(x, 50)
    avg = identify_full(x, 50, max_cycles=5, tolerance=5.0)
    # three cycles of the new shape get averaged, the old ones are left out
    np.testing.assert_allclose(avg.values, np.diff(x)[-150:].reshape(3, 50).mean(axis=0))
    assert np.sqrt(np.mean((avg.values - new) ** 2)) < np.sqrt(np.mean((single.values - new) ** 2))


def _poly_traj(n, coeffs):
    t = np.arange(n) / (n - 1)
    return np.polynomial.polynomial.polyval(t, coeffs)


@pytest.mark.parametrize("deg", [0, 5, 12, 18])
def test_compress_polynomials_exact(deg):
    rng = np.random.default_rng(deg)
    vals = _poly_traj(64, rng.normal(0, 1, deg + 1))
    cm = compress(ExcitationModel(vals))
    assert cm.value_count == 20 and len(cm.coefficients) == 19
    rec = reconstruct(cm).values
    assert np.max(np.abs(rec - vals)) <= 1e-6 * max(1.0, np.max(np.abs(vals)))


def test_compress_constant():
    cm = compress(ExcitationModel(np.full(30, 2.5)))
    assert cm.coefficients[0] == pytest.approx(2.5)
    np.testing.assert_allclose(cm.coefficients[1:], 0.0, atol=1e-12)


def test_compress_gait_against_normal_equations_oracle():
    vals = excitation_cycle("gait", 60, 40.0)
    rec = reconstruct(compress(ExcitationModel(vals))).values
    oracle = lstsq_normal_equations(list(np.arange(60) / 59), list(vals), 18)
    np.testing.assert_allclose(rec, oracle, atol=1e-8)
    assert np.sqrt(np.mean((rec - vals) ** 2)) < 0.1 * np.ptp(vals)


def test_compress_short_cycle_sends_raw():
    assert compress(ExcitationModel(np.ones(19))) is None
    assert compress(ExcitationModel(np.ones(20))) is not None


def test_compress_ill_conditioned_warns():
    with pytest.warns(UserWarning):
        assert compress(ExcitationModel([np.nan] * 25)) is None


def test_reconstruct_zero_and_determinism():
    z = reconstruct(CompressedModel(np.zeros(19), 37))
    assert z.cycle_length == 37 and not np.any(z.values)
    cm = compress(ExcitationModel(GAIT50))
    assert reconstruct(cm, 4).version == 4
    assert reconstruct(cm).values.tobytes() == reconstruct(cm).values.tobytes()


@settings(max_examples=30, deadline=None)
@given(st.integers(20, 150), st.integers(0, 10_000))
def test_compress_idempotent(n, seed):
    vals = np.random.default_rng(seed).normal(0, 3, n)
    c1 = compress(ExcitationModel(vals)).coefficients
    c2 = compress(reconstruct(CompressedModel(c1, n))).coefficients
    np.testing.assert_allclose(c2, c1, rtol=1e-9, atol=1e-9 * np.max(np.abs(c1)))
