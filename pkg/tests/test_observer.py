import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_adrc.errors import ConfigError
from cascade_adrc.observer import (CascadeObserver, ObserverConfig, consistent_state, gains_for_level,
                                   observer_derivatives, observer_step, select_estimate, zero_state)
from oracles import standard_eso_trajectory

UNIT = ObserverConfig(levels=1, omega_top=1.0, b_hat=1.0)


def test_unit_bandwidth_gains():
    assert gains_for_level(1, UNIT) == (3.0, 3.0, 1.0)
    assert gains_for_level(1, ObserverConfig(levels=1, omega_top=400.0)) == pytest.approx((1200.0, 4.8e5, 6.4e7))


def test_table_bandwidths():
    assert ObserverConfig().bandwidths == pytest.approx((400.0, 1200.0, 3600.0))
    assert ObserverConfig(levels=2).bandwidths == pytest.approx((1200.0, 3600.0))
    assert ObserverConfig(levels=1).bandwidths == (3600.0,)
    assert ObserverConfig.from_bottom(400.0, 3.0, 3).bandwidths == pytest.approx((400.0, 1200.0, 3600.0))


@pytest.mark.parametrize("kwargs,msg", [(dict(alpha=1.0), "alpha must exceed 1"),
                                        (dict(alpha=0.5), "alpha must exceed 1"),
                                        (dict(levels=0), "levels"), (dict(omega_top=-1.0), "omega_top"),
                                        (dict(b_hat=0.0), "b_hat")])
def test_config_validation(kwargs, msg):
    with pytest.raises(ConfigError, match=msg):
        ObserverConfig(**kwargs)


def test_level_index_checked():
    with pytest.raises(IndexError):
        gains_for_level(4, ObserverConfig())


def test_derivative_examples():
    assert observer_derivatives([0.0, 0.0, 0.0], 1.0, 0.0, UNIT) == [3.0, 3.0, 1.0]
    cfg2 = ObserverConfig.from_bottom(1.0, 3.0, 2, b_hat=1.0)
    d = observer_derivatives([1.0, 0, 0, 0, 0, 0], 1.0, 0.0, cfg2)
    assert d == pytest.approx([0, 0, 0, 9, 27, 27])


@pytest.mark.parametrize("p", [1, 2, 3])
def test_origin_is_equilibrium(p):
    cfg = ObserverConfig(levels=p)
    assert observer_derivatives(zero_state(cfg), 0.0, 0.0, cfg) == [0.0] * cfg.size


def test_dimension_checked():
    with pytest.raises(ValueError):
        observer_derivatives([0.0] * 5, 0.0, 0.0, ObserverConfig(levels=2))


def test_euler_step_examples():
    assert observer_step([0.0] * 3, 1.0, 0.0, UNIT, 0.001) == pytest.approx([0.003, 0.003, 0.001])
    xi = [0.1, -2.0, 5.0]
    assert observer_step(xi, 1.0, 0.3, UNIT, 0.0) == xi


def test_step_size_checks(caplog):
    ObserverConfig().check_step(1e-4)
    assert caplog.text == ""
    ObserverConfig(omega_top=6000.0).check_step(1e-4)
    assert "poorly damped" in caplog.text
    with pytest.raises(ConfigError):
        ObserverConfig(omega_top=20000.0).check_step(1e-4)


def test_selector_examples():
    assert select_estimate([1.0, 2.0, 3.0], UNIT) == (1.0, 2.0, 3.0)
    cfg2 = ObserverConfig(levels=2)
    assert select_estimate([1, 2, 3, 4, 5, 6], cfg2) == (4, 5, 9)
    cfg3 = ObserverConfig(levels=3)
    assert select_estimate([0, 0, 1, 0, 0, 1, 0, 0, 1], cfg3).z3_hat == 3


@pytest.mark.parametrize("p", [1, 2, 3])
def test_consistent_state_selects_truth(p):
    cfg = ObserverConfig(levels=p)
    assert select_estimate(consistent_state(0.5, -3.0, 7e5, cfg), cfg) == (0.5, -3.0, 7e5)


def test_level_one_static_gain():
    """y frozen at c, duty 0: level 1 settles at (c, 0, 0)."""
    obs = CascadeObserver(ObserverConfig(levels=1, omega_top=100.0), 1e-4)
    for _ in range(20000):
        obs.step(0.7, 0.0)
    assert obs.state == pytest.approx([0.7, 0.0, 0.0], abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_single_level_equals_standard_eso(seed):
    rng = np.random.default_rng(seed)
    n = 3000
    ys = rng.normal(0.0, 1.0, n).tolist()
    mus = rng.uniform(0.0, 1.0, n).tolist()
    cfg = ObserverConfig(levels=1)
    obs = CascadeObserver(cfg, 1e-4)
    ref = standard_eso_trajectory(ys, mus, 3600.0, cfg.b_hat, 1e-4)
    state = zero_state(cfg)
    for k, (y, mu) in enumerate(zip(ys, mus)):
        obs.step(y, mu)
        state = observer_step(state, y, mu, cfg, 1e-4)
        assert tuple(obs.state) == ref[k]
        assert tuple(state) == ref[k]


@settings(max_examples=30, deadline=None)
@given(p=st.integers(1, 3), seed=st.integers(0, 10 ** 6))
def test_wrapper_matches_functional_step(p, seed):
    cfg = ObserverConfig(levels=p)
    rng = np.random.default_rng(seed)
    obs = CascadeObserver(cfg, 1e-4)
    state = zero_state(cfg)
    for y, mu in zip(rng.normal(size=20), rng.uniform(size=20)):
        obs.step(float(y), float(mu))
        state = observer_step(state, float(y), float(mu), cfg, 1e-4)
    assert obs.state == state


@settings(max_examples=40, deadline=None)
@given(p=st.integers(1, 3), seed=st.integers(0, 10 ** 6))
def test_observer_is_linear(p, seed):
    cfg = ObserverConfig(levels=p, omega_top=50.0, alpha=2.0, b_hat=3.0)
    rng = np.random.default_rng(seed)
    x1, x2 = rng.normal(size=(2, cfg.size))
    y1, y2, m1, m2 = rng.normal(size=4)
    c = float(rng.uniform(-2, 2))
    lhs = np.array(observer_derivatives(list(x1 + c * x2), y1 + c * y2, m1 + c * m2, cfg))
    rhs = (np.array(observer_derivatives(list(x1), y1, m1, cfg))
           + c * np.array(observer_derivatives(list(x2), y2, m2, cfg)))
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_noise_free_tracking_of_known_signal(p):
    """Observer driven by an exactly known double-integrator trajectory."""
    cfg = ObserverConfig(levels=p, b_hat=1.0)
    ts = 1e-5
    obs = CascadeObserver(cfg, ts)
    # e = sin(w t), e'' = F* - mu with mu = 0 -> F* = -w^2 sin(w t)
    w = 20.0
    for k in range(40000):
        obs.step(np.sin(w * k * ts), 0.0)
    t = 40000 * ts
    est = obs.estimate()
    assert est.z1_hat == pytest.approx(np.sin(w * (t - ts)) + 0.0, abs=5e-3)
    assert est.z3_hat == pytest.approx(-w * w * np.sin(w * t), abs=0.05 * w * w)
