import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclic_etl.dynamics import (SHAPES, ScenarioConfig, Segment, angle_template, dump_scenario,
                                 excitation_cycle, generate_scenario, ingest_csv, load_scenario,
                                 random_scenario, random_walk_model, sample_noise, step,
                                 variable_gait_scenario, vector_additive_model)
from cyclic_etl.errors import ConfigurationError, CsvFormatError


@pytest.mark.parametrize("x, u, eps, expected", [
    (10.0, 0.5, 0.0, 10.5),
    (10.0, 0.0, 0.0, 10.0),
    (1.0, -0.3, 0.1, 0.8),
])
def test_step_scalar(x, u, eps, expected):
    assert step(random_walk_model(), x, u, eps) == pytest.approx(expected, abs=1e-15)


def test_step_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        step(random_walk_model(), np.zeros(2), 0.0, 0.0)
    m = vector_additive_model(3)
    np.testing.assert_array_equal(step(m, np.ones(3), np.ones(3), np.zeros(3)), 2 * np.ones(3))
    with pytest.raises(ConfigurationError):
        step(m, np.ones(3), np.ones(2), np.zeros(3))


def test_metric_properties():
    m = random_walk_model()
    assert m.metric(3.0, 3.0) == 0.0
    assert m.metric(1.0, 4.0) == m.metric(4.0, 1.0) == 3.0
    v = vector_additive_model(2)
    assert v.metric(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(5.0)


def test_noise_zero_sigma_is_exact_zero():
    assert sample_noise(np.random.default_rng(0), 0.0) == 0.0
    with pytest.raises(ConfigurationError):
        sample_noise(np.random.default_rng(0), -1.0)


def test_noise_statistics():
    draws = sample_noise(np.random.default_rng(5), 0.9, 1_000_000)
    assert abs(draws.mean()) < 0.01
    assert abs(draws.std() - 0.9) < 0.01
    assert abs(draws[:100_000].var() / 0.81 - 1) < 0.05


def test_noise_deterministic():
    a = sample_noise(np.random.default_rng(9), 0.9, 50)
    b = sample_noise(np.random.default_rng(9), 0.9, 50)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("shape", SHAPES)
def test_cycle_sums_to_zero(shape):
    u = excitation_cycle(shape, 53, 40.0)
    assert u.size == 53
    assert abs(u.sum()) < 1e-9


@pytest.mark.parametrize("shape", [s for s in SHAPES if s != "constant"])
def test_templates_unit_peak_to_peak(shape):
    a = angle_template(shape, np.linspace(0, 1, 4001))
    assert np.ptp(a) == pytest.approx(1.0, rel=1e-3)


def test_constant_shape_gives_constant_state():
    sc = generate_scenario(ScenarioConfig((Segment(200, 30, "constant"),), noise_sigma=0.0, x0=3.0))
    np.testing.assert_array_equal(sc.x, np.full(200, 3.0))


def test_sine_returns_after_each_cycle():
    sc = generate_scenario(ScenarioConfig((Segment(250, 50, "sine", 10.0),), noise_sigma=0.0))
    np.testing.assert_allclose(sc.x[50:], sc.x[:-50], atol=1e-9)


def test_u_periodic_within_segments():
    cfg = ScenarioConfig((Segment(300, 50), Segment(330, 55, "drop_foot")), rng_seed=3)
    sc = generate_scenario(cfg)
    u0, u1 = sc.u[:300], sc.u[300:]
    np.testing.assert_array_equal(u0[50:], u0[:-50])
    np.testing.assert_array_equal(u1[55:], u1[:-55])
    np.testing.assert_array_equal(sc.segment, np.repeat([0, 1], [300, 330]))


def test_second_segment_is_time_warp():
    # both cycles are the same continuous angle curve sampled on different grids
    sc = generate_scenario(ScenarioConfig((Segment(100, 50), Segment(110, 55)), noise_sigma=0.0))
    for start, n in ((0, 50), (100, 55)):
        angle = np.cumsum(sc.u[start:start + n])
        phase = np.arange(1, n + 1) / n
        expected = 40.0 * (angle_template("gait", phase) - angle_template("gait", np.zeros(1)))
        np.testing.assert_allclose(angle, expected, atol=1e-9)


def test_recursion_holds(rng):
    cfg = ScenarioConfig((Segment(500, 45),), rng_seed=11, x0=1.5)
    sc = generate_scenario(cfg)
    eps = sample_noise(np.random.default_rng(11), 0.9, 500)
    expected = 1.5 + np.cumsum(sc.u + eps)
    np.testing.assert_allclose(sc.x, expected, atol=1e-9)
    assert list(sc)[0][0] == 0 and len(sc) == 500


def test_determinism():
    cfg = ScenarioConfig((Segment(400, 47), Segment(400, 52, "stiff_knee")), rng_seed=42)
    a, b = generate_scenario(cfg), generate_scenario(cfg)
    assert a.x.tobytes() == b.x.tobytes()


def test_config_validation():
    with pytest.raises(ConfigurationError):
        generate_scenario(ScenarioConfig(()))
    with pytest.raises(ConfigurationError):
        ScenarioConfig((Segment(0, 50),))
    with pytest.raises(ConfigurationError):
        ScenarioConfig((Segment(10, 2.5),))
    with pytest.raises(ConfigurationError):
        ScenarioConfig((Segment(10, 5, "moonwalk"),))
    with pytest.raises(ConfigurationError):
        ScenarioConfig((Segment(10, 5),), noise_sigma=-1)


def test_scenario_file_round_trip(tmp_path):
    cfg = ScenarioConfig((Segment(100, 50), {"duration": 60, "cycle_length": 40, "shape": "sine"}),
                         rng_seed=4, noise_sigma=0.5)
    path = tmp_path / "s.json"
    dump_scenario(cfg, path)
    assert load_scenario(path) == cfg
    path.write_text(json.dumps({"segments": [], "bogus": 1}))
    with pytest.raises(ConfigurationError):
        load_scenario(path)


def test_random_and_variable_scenarios():
    cfg = random_scenario(np.random.default_rng(0))
    assert len(cfg.segments) == 4
    assert all(40 <= s.cycle_length <= 75 for s in cfg.segments)
    var = variable_gait_scenario(2, seed=1)
    assert var.n_samples == 6000
    assert len({s.cycle_length for s in var.segments}) > 1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 120), st.integers(1, 80), st.sampled_from(SHAPES)),
                min_size=1, max_size=4),
       st.floats(-50, 50))
def test_noise_free_state_is_cumulative_input(segs, x0):
    cfg = ScenarioConfig(tuple(Segment(d, n, s) for d, n, s in segs), noise_sigma=0.0, x0=x0)
    sc = generate_scenario(cfg)
    np.testing.assert_allclose(sc.x, x0 + np.cumsum(sc.u), atol=1e-8)


def test_ingest_basic(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,12.5\n1,12.7\n")
    assert ingest_csv(p) == [(0, 12.5), (1, 12.7)]
    p.write_text("k,x\n0,1\n3,2\n")
    assert ingest_csv(p) == [(0, 1.0), (3, 2.0)]


def test_ingest_empty_warns(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.warns(UserWarning):
        assert ingest_csv(p) == []


def test_ingest_errors(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("0,1.0\n1,2.0\n2,abc\n")
    with pytest.raises(CsvFormatError, match="line 3") as info:
        ingest_csv(p)
    assert info.value.line == 3
    p.write_text("0,1.0\n2,2.0\n1,3.0\n")
    with pytest.raises(CsvFormatError, match="line 3"):
        ingest_csv(p)
    p.write_text("0,1.0,5\n")
    with pytest.raises(CsvFormatError, match="line 1"):
        ingest_csv(p)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p.write_text("0,1\n")
        assert ingest_csv(p) == [(0, 1.0)]
