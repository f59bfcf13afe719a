import dataclasses

import numpy as np
import pytest

from cascade_adrc.errors import ConfigError, ObserverDivergence
from cascade_adrc.metrics import integral_abs
from cascade_adrc.observer import ObserverConfig
from cascade_adrc.plant import PlantState
from cascade_adrc.signals import DisturbanceProfile, NoiseConfig, ReferenceConfig, Segment
from cascade_adrc.simloop import RECORD_FIELDS, SimConfig, lpf_step, run


def short(nominal, **changes):
    cfg = dict(nominal)
    sim = changes.pop("sim", {})
    cfg["sim_cfg"] = dataclasses.replace(cfg["sim_cfg"], **{"duration": 0.2, **sim})
    cfg.update(changes)
    return cfg


def test_record_layout():
    assert RECORD_FIELDS == ("t", "v_r", "v_o", "y_o", "e", "y_meas", "duty", "duty_unsat", "d",
                             "z1_hat", "z2_hat", "z3_hat", "f_star_truth")


def test_equilibrium_start_stays_at_rest(nominal):
    res = run(**short(nominal, ref_cfg=ReferenceConfig(square_amplitude=0.0),
                      dist_profile=DisturbanceProfile(), noise_cfg=NoiseConfig(amplitude=0.0)))
    assert np.max(np.abs(res.column("e"))) < 1e-9
    assert np.max(np.abs(res.column("z3_hat") - res.column("f_star_truth"))) < 1e-6


def test_record_invariants(nominal):
    res = run(**short(nominal))
    t = res.column("t")
    assert len(res) == 2000
    assert np.allclose(np.diff(t), 1e-4, rtol=0, atol=1e-12)
    n = res.column("y_o") - res.column("v_o")
    assert np.max(np.abs(n)) <= 0.02 + 1e-12
    assert np.allclose(res.column("e"), res.column("v_r") - res.column("v_o"))
    assert np.allclose(res.column("y_meas"), res.column("v_r") - res.column("y_o"))
    duty = res.column("duty")
    assert duty.min() >= 0.0 and duty.max() <= 1.0


def test_deterministic(nominal):
    a = run(**short(nominal))
    b = run(**short(nominal))
    assert a.records == b.records


def test_seed_override(nominal):
    a = run(**short(nominal, sim={"seed": 5}))
    b = run(**short(nominal, noise_cfg=NoiseConfig(seed=5)))
    c = run(**short(nominal, sim={"seed": 6}))
    assert a.records == b.records
    assert a.records != c.records


def test_deeper_cascade_tracks_better(nominal):
    cfg = dict(nominal)
    iae = {}
    for p in (1, 3):
        cfg["obs_cfg"] = ObserverConfig(levels=p)
        res = run(**cfg)
        iae[p] = integral_abs(res.column("t"), res.column("e"))
        if p == 3:
            assert res.saturated_samples / len(res) < 0.05
    assert iae[3] < iae[1]


def test_truth_matches_error_curvature(nominal):
    res = run(**short(nominal, noise_cfg=NoiseConfig(amplitude=0.0), sim={"duration": 0.05}))
    e = res.column("e")
    mu = res.column("duty")
    e_dd = (e[2:] - 2 * e[1:-1] + e[:-2]) / 1e-8
    # the held duty jumps at each sample: the second difference sees the mean
    model = res.column("f_star_truth")[1:-1] - 2e6 * 0.5 * (mu[1:-1] + mu[:-2])
    assert np.max(np.abs(e_dd - model)) < 1e-2 * np.max(np.abs(res.column("f_star_truth")))


def test_rk4_fourth_order(nominal):
    prof = DisturbanceProfile((Segment(0.0, 1.0, "sine", {"amplitude": 0.05, "freq_hz": 50.0}),))
    finals = []
    for m in (1, 2, 4):
        res = run(**short(nominal, dist_profile=prof, noise_cfg=NoiseConfig(amplitude=0.0),
                          sim={"duration": 0.02, "substeps": m}))
        finals.append(res.records[-1].v_o)
    ratio = abs(finals[0] - finals[1]) / abs(finals[1] - finals[2])
    assert 10.0 < ratio < 22.0


def test_bound_violations_logged(nominal, caplog):
    res = run(**short(nominal, sim={"r_vo": 7.5}))
    assert res.bound_violations
    assert "bounded region" in caplog.text


def test_divergence_aborts_with_partial_records(nominal):
    # the disturbance estimate passes 8e5 during the first falling edge
    with pytest.raises(ObserverDivergence) as info:
        run(**short(nominal, sim={"divergence_threshold": 8e5, "duration": 1.0}))
    assert 0 < len(info.value.partial) < 10000


def test_zero_observer_init_option(nominal):
    steady = run(**short(nominal, sim={"duration": 0.05}))
    zero = run(**short(nominal, sim={"duration": 0.05, "observer_init": "zero"}))
    peak = lambda r: np.max(np.abs(r.column("e")))
    assert peak(zero) > 10 * peak(steady)


def test_initial_state_override(nominal):
    res = run(**short(nominal, sim={"duration": 0.01, "initial_state": PlantState(5.0, 0.1)}))
    assert res.records[0].v_o == 5.0


def test_lpf_in_loop_smooths_measurement(nominal):
    raw = run(**short(nominal))
    filt = run(**short(nominal, sim={"lpf_tau": 1e-3}))
    jitter = lambda r: np.abs(np.diff(r.column("y_meas"))).sum()
    assert jitter(filt) < 0.5 * jitter(raw)


def test_lpf_step_examples():
    x, dt, tau = 0.0, 1e-6, 1e-3
    for _ in range(1000):
        x = lpf_step(x, 1.0, tau, dt)
    assert x == pytest.approx(1 - np.exp(-1), abs=1e-3)
    assert lpf_step(2.5, 2.5, tau, 1e-4) == 2.5
    with pytest.raises(ConfigError):
        lpf_step(0.0, 1.0, 5e-5, 1e-4)


@pytest.mark.parametrize("kwargs", [dict(ts=0.0), dict(duration=0.00015), dict(substeps=0),
                                    dict(observer_init="random"), dict(lpf_tau=1e-5)])
def test_sim_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SimConfig(**kwargs)
