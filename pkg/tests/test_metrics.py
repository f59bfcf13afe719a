import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cascade_adrc.metrics import (CRITERIA_KEYS, CriteriaReport, integral_abs, ripple_amplitude,
                                  saturation_fraction, total_variation)


def sine_grid(ts):
    n = 2 * int(round(math.pi / ts))  # keeps the kink of |sin| at pi on the grid
    t = np.linspace(0.0, 2 * math.pi, n + 1)
    return t, np.sin(t)


def test_integral_of_abs_sine():
    assert integral_abs(*sine_grid(1e-4)) == pytest.approx(4.0, abs=1e-3)


def test_trapezoid_error_is_second_order():
    errs = [abs(integral_abs(*sine_grid(ts)) - 4.0) for ts in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_integral_trivial_cases():
    t = np.linspace(0.0, 2.5, 251)
    assert integral_abs(t, np.zeros_like(t)) == 0.0
    assert integral_abs(t, np.full_like(t, -0.3)) == pytest.approx(0.75, rel=1e-14)


def test_integral_needs_uniform_samples():
    with pytest.raises(ValueError):
        integral_abs([0.0, 1.0, 3.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        integral_abs([0.0], [1.0])


def test_total_variation_examples():
    t = np.linspace(0.0, 1.0, 1001)
    assert total_variation(t, t) == 1.0
    assert total_variation(t, np.full_like(t, 3.0)) == 0.0
    tri = np.concatenate([np.linspace(0, 1, 501), np.linspace(1, 0, 501)[1:]])
    assert total_variation(np.arange(len(tri)), tri) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        total_variation([0.0], [0.0])


@given(st.floats(0.0, 1e3), st.floats(-1e3, 1e3))
def test_ramp_variation_is_range(slope, offset):
    t = np.linspace(0.0, 1.0, 101)
    x = offset + slope * t
    assert total_variation(t, x) == pytest.approx(abs(x[-1] - x[0]), rel=1e-9, abs=1e-9)


def test_ripple_examples():
    t = np.arange(0, 20000) * 1e-4
    assert ripple_amplitude(t, np.full_like(t, 4.2), (0.5, 1.5)) == 0.0
    x = 0.05 * np.sin(2 * math.pi * 50 * t)
    assert ripple_amplitude(t, x, (0.2, 0.5)) == pytest.approx(0.05, rel=1e-3)
    assert ripple_amplitude(t, x + 3.0, (0.2, 0.5)) == pytest.approx(0.05, rel=1e-3)


@pytest.mark.parametrize("window", [(0.5, 0.5), (0.6, 0.4), (-1.0, 0.5), (0.5, 5.0)])
def test_ripple_window_errors(window):
    t = np.arange(0, 10000) * 1e-4
    with pytest.raises(ValueError):
        ripple_amplitude(t, np.zeros_like(t), window)


@given(st.floats(0.0, 100.0))
def test_positive_homogeneity(c):
    t = np.arange(0, 5000) * 1e-4
    x = np.sin(7 * t) + 0.1 * np.cos(300 * t)
    assert integral_abs(t, c * x) == pytest.approx(c * integral_abs(t, x), rel=1e-9, abs=1e-12)
    assert total_variation(t, c * x) == pytest.approx(c * total_variation(t, x), rel=1e-9, abs=1e-12)
    assert ripple_amplitude(t, c * x, (0.1, 0.4)) == pytest.approx(
        c * ripple_amplitude(t, x, (0.1, 0.4)), rel=1e-9, abs=1e-12)


def test_saturation_fraction():
    assert saturation_fraction([0.5, 1.2, -0.1, 0.0, 1.0]) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        saturation_fraction([])


def test_report_validation():
    rep = CriteriaReport(1.0, 2.0, 3.0, 0.0, 0.1)
    assert tuple(rep.to_dict()) == CRITERIA_KEYS
    assert rep.to_dict()["diverged"] is False
    with pytest.raises(ValueError):
        CriteriaReport(-1.0, 2.0, 3.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        CriteriaReport(float("nan"), 2.0, 3.0, 0.0, 0.1)
