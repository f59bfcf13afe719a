"""Average model of a DC-DC buck converter.

State is the capacitor voltage ``v_o`` and the inductor current ``i_l``; the
input is the duty ratio plus an input-additive external disturbance ``d``::

    dv_o/dt = i_l / C - v_o / (C R)
    di_l/dt = (V_in / L) (duty + d) - v_o / L
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import ConfigError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the converter (defaults are the lab testbed)."""

    v_in: float = 20.0
    inductance_l: float = 0.01
    capacitance_c: float = 0.001
    resistance_r: float = 50.0

    def __post_init__(self):
        for name in ("v_in", "inductance_l", "capacitance_c", "resistance_r"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ConfigError(f"plant.{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.b) or self.b <= 0.0:
            raise ConfigError("derived input gain V_in/(C L) is not finite and positive")

    @property
    def a1(self) -> float:
        """Coefficient of dv_o/dt in the second-order output equation."""
        return -1.0 / (self.capacitance_c * self.resistance_r)

    @property
    def a2(self) -> float:
        """Coefficient of v_o in the second-order output equation."""
        return -1.0 / (self.capacitance_c * self.inductance_l)

    @property
    def b(self) -> float:
        """Input gain V_in / (C L) of duty on d^2 v_o / dt^2."""
        return self.v_in / (self.capacitance_c * self.inductance_l)


@dataclass(frozen=True)
class PlantState:
    v_o: float
    i_l: float


def nominal_b_hat(params: PlantParams) -> float:
    """Input-gain estimate computed from the nameplate values."""
    return params.b


def equilibrium(duty: float, params: PlantParams) -> PlantState:
    """Steady state reached under a constant duty and zero disturbance."""
    v_o = params.v_in * duty
    return PlantState(v_o=v_o, i_l=v_o / params.resistance_r)


def derivatives(state: PlantState, duty: float, disturbance: float,
                params: PlantParams) -> tuple[float, float]:
    """Time derivatives ``(dv_o/dt, di_l/dt)`` of the average model."""
    for name, value in (("v_o", state.v_o), ("i_l", state.i_l),
                        ("duty", duty), ("disturbance", disturbance)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite {name}: {value!r}")
    c, l = params.capacitance_c, params.inductance_l
    dv = state.i_l / c - state.v_o / (c * params.resistance_r)
    di = (params.v_in / l) * (duty + disturbance) - state.v_o / l
    return dv, di


def total_disturbance_truth(state: PlantState, state_deriv: tuple[float, float],
                            duty: float, d: float, params: PlantParams,
                            b_hat: float) -> float:
    """Exact lumped disturbance ``F`` acting on d^2 v_o / dt^2.

    ``F = a2 v_o + a1 dv_o/dt + (b - b_hat) duty + b d``; the error-domain
    counterpart used by the observer is ``d^2 v_r / dt^2 - F``.
    """
    if b_hat == 0.0:
        raise ValueError("b_hat must be non-zero")
    return (params.a2 * state.v_o + params.a1 * state_deriv[0]
            + (params.b - b_hat) * duty + params.b * d)


def check_bounds(state: PlantState, r_vo: float = 50.0, r_il: float = 10.0) -> list[str]:
    """Return diagnostics for every violated state bound (empty when inside).

    Nothing is clamped; the caller decides whether to log or abort.
    """
    problems = []
    if not abs(state.v_o) < r_vo:
        problems.append(f"|v_o|={abs(state.v_o):.6g} V exceeds bound {r_vo:g} V")
    if not abs(state.i_l) < r_il:
        problems.append(f"|i_l|={abs(state.i_l):.6g} A exceeds bound {r_il:g} A")
    for msg in problems:
        log.warning("plant bound violation: %s", msg)
    return problems
