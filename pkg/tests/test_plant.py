import math

import pytest
from hypothesis import given, strategies as st

from cascade_adrc.errors import ConfigError
from cascade_adrc.plant import (PlantParams, PlantState, check_bounds, derivatives, equilibrium,
                                nominal_b_hat, total_disturbance_truth)

P = PlantParams()


def test_derived_coefficients():
    assert P.a1 == pytest.approx(-20.0)
    assert P.a2 == pytest.approx(-1.0e5)
    assert P.b == pytest.approx(2.0e6)
    assert nominal_b_hat(P) == pytest.approx(2.0e6)


@pytest.mark.parametrize("field", ["v_in", "inductance_l", "capacitance_c", "resistance_r"])
@pytest.mark.parametrize("value", [0.0, -1.0, math.inf, math.nan])
def test_params_must_be_positive(field, value):
    with pytest.raises(ConfigError):
        PlantParams(**{field: value})


def test_equilibrium_has_zero_derivatives():
    assert derivatives(PlantState(10.0, 0.2), 0.5, 0.0, P) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert equilibrium(0.5, P) == PlantState(10.0, 0.2)


def test_origin_and_full_duty():
    assert derivatives(PlantState(0.0, 0.0), 0.0, 0.0, P) == (0.0, 0.0)
    assert derivatives(PlantState(0.0, 0.0), 1.0, 0.0, P) == pytest.approx((0.0, 2000.0))


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_non_finite_input_rejected(bad):
    with pytest.raises(ValueError):
        derivatives(PlantState(bad, 0.0), 0.5, 0.0, P)
    with pytest.raises(ValueError):
        derivatives(PlantState(0.0, 0.0), bad, 0.0, P)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_affine_in_duty_plus_disturbance(mu, d):
    _, di1 = derivatives(PlantState(0.0, 0.0), mu, d, P)
    _, di2 = derivatives(PlantState(0.0, 0.0), 2 * mu, 2 * d, P)
    assert di2 == pytest.approx(2 * di1, rel=1e-12, abs=1e-9)
    # only the sum duty + d matters
    assert derivatives(PlantState(1.0, 0.1), mu, d, P) == pytest.approx(
        derivatives(PlantState(1.0, 0.1), mu + d, 0.0, P))


def test_total_disturbance_examples():
    b = P.b
    assert total_disturbance_truth(PlantState(0, 0), (0, 0), 0.0, 0.0, P, b) == 0.0
    for mu in (0.0, 0.3, 1.0):
        assert total_disturbance_truth(PlantState(10, 0), (0, 0), mu, 0.0, P, b) == pytest.approx(-1.0e6)
    assert total_disturbance_truth(PlantState(0, 0), (0, 0), 0.0, 0.1, P, b) == pytest.approx(2.0e5)
    with pytest.raises(ValueError):
        total_disturbance_truth(PlantState(0, 0), (0, 0), 0.0, 0.0, P, 0.0)


def test_input_gain_mismatch_enters_disturbance():
    f = total_disturbance_truth(PlantState(0, 0), (0, 0), 0.5, 0.0, P, 1.5e6)
    assert f == pytest.approx(0.5 * 0.5e6)


@given(st.floats(0, 1), st.floats(-0.5, 0.5), st.floats(0, 15), st.floats(-1, 1))
def test_second_derivative_identity(mu, d, v, i):
    """v'' = F + b_hat mu along the model."""
    s = PlantState(v, i)
    dv, di = derivatives(s, mu, d, P)
    v_dd = di / P.capacitance_c - dv / (P.capacitance_c * P.resistance_r)
    f = total_disturbance_truth(s, (dv, di), mu, d, P, 2.0e6)
    assert v_dd == pytest.approx(f + 2.0e6 * mu, rel=1e-9, abs=1e-3)


def test_bounds_are_reported_not_clamped(caplog):
    assert check_bounds(PlantState(10.0, 1.0)) == []
    msgs = check_bounds(PlantState(60.0, -11.0))
    assert len(msgs) == 2
    assert "plant bound violation" in caplog.text


def test_constant_duty_converges_to_equilibrium():
    s = PlantState(0.0, 0.0)
    h = 1e-4
    for _ in range(25000):
        k1 = derivatives(s, 0.3, 0.0, P)
        k2 = derivatives(PlantState(s.v_o + h / 2 * k1[0], s.i_l + h / 2 * k1[1]), 0.3, 0.0, P)
        k3 = derivatives(PlantState(s.v_o + h / 2 * k2[0], s.i_l + h / 2 * k2[1]), 0.3, 0.0, P)
        k4 = derivatives(PlantState(s.v_o + h * k3[0], s.i_l + h * k3[1]), 0.3, 0.0, P)
        s = PlantState(s.v_o + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                       s.i_l + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))
    assert s.v_o == pytest.approx(6.0, abs=1e-6)
    assert s.i_l == pytest.approx(0.12, abs=1e-7)
