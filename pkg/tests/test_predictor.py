import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclic_etl.dynamics import ScenarioConfig, Segment, generate_scenario, random_walk_model
from cyclic_etl.errors import ConfigurationError, ProtocolError, StateCorruptionError
from cyclic_etl.predictor import (ExcitationModel, Predictor, PredictorState, advance_index,
                                  commit, predict)

SYS = random_walk_model()


@pytest.mark.parametrize("j, n, g, expected", [(3, 5, 0, 4), (5, 5, 0, 1), (3, 5, 1, 1), (1, 1, 0, 1)])
def test_advance_index(j, n, g, expected):
    assert advance_index(j, n, g) == expected


@pytest.mark.parametrize("j, n", [(0, 5), (6, 5), (-1, 3)])
def test_advance_index_out_of_range(j, n):
    with pytest.raises(StateCorruptionError):
        advance_index(j, n)


@given(st.integers(1, 60), st.integers(1, 300))
def test_index_periodic(n, steps):
    j = n
    seq = []
    for _ in range(steps + n):
        j = advance_index(j, n)
        seq.append(j)
    assert seq[:steps] == seq[n:n + steps]
    assert all(1 <= v <= n for v in seq)


def test_model_basics():
    m = ExcitationModel([0.5, 1.0, -1.5])
    assert m.cycle_length == 3 and m.input_dim == 1 and m.version == 0
    assert m.column(1) == 0.5 and m.column(3) == -1.5
    m2 = m.replaced([1.0])
    assert m2.version == 1 and m2.cycle_length == 1
    assert ExcitationModel.zeros() == ExcitationModel([0.0])
    assert m != m.replaced(m.trajectory)
    with pytest.raises(ValueError):
        m.trajectory[0, 0] = 3.0
    with pytest.raises(ConfigurationError):
        ExcitationModel(np.zeros((1, 0)))


def test_predict_examples():
    st_ = PredictorState(10.0, 1, ExcitationModel([0.5, 0.1]))
    assert predict(st_, SYS) == 10.5
    zero = PredictorState(7.25, 1, ExcitationModel.zeros())
    assert predict(zero, SYS) == 7.25
    assert st_.x_hat == 10.0


def test_commit_examples():
    s = PredictorState(10.0, 1, ExcitationModel([0.5]))
    assert commit(s, 10.5) == 10.5
    assert commit(s, 10.5, 12.8, 1) == 12.8
    assert SYS.metric(12.8, commit(s, 10.5, 12.8, 1)) == 0
    with pytest.raises(ProtocolError):
        commit(s, 10.5, None, 1)


def test_exact_model_tracks_noise_free_cycle():
    sc = generate_scenario(ScenarioConfig((Segment(150, 50),), noise_sigma=0.0))
    p = Predictor(SYS, ExcitationModel(sc.u[:50]))
    out = [p.step(sc.x[0])] + [p.step() for _ in range(149)]
    # the first sample initialises; u[0] is already inside x[0]
    np.testing.assert_allclose(out, sc.x, atol=1e-9)


def test_predictor_needs_initial_measurement():
    p = Predictor()
    with pytest.raises(ProtocolError):
        p.step()


def test_install_restarts_index():
    p = Predictor(SYS, ExcitationModel([1.0, 2.0, 3.0]))
    p.step(0.0)
    assert p.state.j == 1
    p.install(ExcitationModel([5.0, 6.0]))
    assert p.state.j == 2
    assert p.step() == 5.0
    assert p.state.snapshot() == (5.0, 1, 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=12),
       st.lists(st.tuples(st.booleans(), st.floats(-100, 100)), min_size=1, max_size=80))
def test_mirror_property(traj, stream):
    a = Predictor(SYS, ExcitationModel(traj))
    b = Predictor(SYS, ExcitationModel(traj))
    first = stream[0][1]
    assert a.step(first) == b.step(first)
    for trig, meas in stream[1:]:
        m = meas if trig else None
        assert a.step(m) == b.step(m)
        assert a.state.snapshot() == b.state.snapshot()
