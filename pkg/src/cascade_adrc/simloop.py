"""Fixed-step closed-loop simulation.

The converter is integrated in continuous time with classical RK4 substeps;
noise sampling, observer, and controller run once per sampling period and the
duty is held constant in between.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .controller import ControllerConfig, control
from .errors import ConfigError, ObserverDivergence
from .observer import CascadeObserver, ObserverConfig, consistent_state
from .plant import PlantParams, PlantState, equilibrium
from .signals import (DisturbanceProfile, NoiseConfig, ReferenceConfig,
                      ReferenceGenerator, make_rng, noise_sample)

log = logging.getLogger(__name__)

RECORD_FIELDS = ("t", "v_r", "v_o", "y_o", "e", "y_meas", "duty", "duty_unsat", "d",
                 "z1_hat", "z2_hat", "z3_hat", "f_star_truth")


class SimRecord(NamedTuple):
    """One row per sampling instant (``y_meas`` is the error the controller sees)."""

    t: float
    v_r: float
    v_o: float
    y_o: float
    e: float
    y_meas: float
    duty: float
    duty_unsat: float
    d: float
    z1_hat: float
    z2_hat: float
    z3_hat: float
    f_star_truth: float


@dataclass(frozen=True)
class SimConfig:
    """Timing and run-level settings.

    ``seed`` overrides the noise config seed when given. ``initial_state``
    defaults to the converter equilibrium at the initial reference value.
    ``lpf_tau`` switches on a first-order filter on the measured output.
    ``observer_init`` is ``"steady"`` (observer starts consistent with the
    plant, so there is no start-up peaking) or ``"zero"``.
    """

    ts: float = 1.0e-4
    substeps: int = 10
    duration: float = 3.0
    seed: int | None = None
    initial_state: PlantState | None = None
    r_vo: float = 50.0
    r_il: float = 10.0
    lpf_tau: float | None = None
    divergence_threshold: float = 1.0e12
    observer_init: str = "steady"

    def __post_init__(self):
        if not self.ts > 0.0:
            raise ConfigError("sim.ts must be > 0")
        if not isinstance(self.substeps, int) or self.substeps < 1:
            raise ConfigError("sim.substeps must be an integer >= 1")
        n = self.duration / self.ts
        if not self.duration > 0.0 or abs(n - round(n)) > 1e-6 * max(n, 1.0):
            raise ConfigError("sim.duration must be a positive multiple of sim.ts")
        if self.observer_init not in ("steady", "zero"):
            raise ConfigError("sim.observer_init must be 'steady' or 'zero'")
        if self.lpf_tau is not None:
            check_lpf(self.lpf_tau, self.ts)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.ts))


def check_lpf(tau: float, dt: float) -> None:
    if not tau > 0.0:
        raise ConfigError("LPF time constant must be > 0")
    if dt >= 2.0 * tau:
        raise ConfigError(f"LPF step dt={dt:g} >= 2 tau={2 * tau:g}: discrete filter unstable")


def lpf_step(state: float, value: float, tau: float, dt: float) -> float:
    """One Euler step of ``1 / (tau s + 1)``."""
    check_lpf(tau, dt)
    return state + (dt / tau) * (value - state)


@dataclass
class SimResult:
    records: list[SimRecord]
    bound_violations: list[tuple[float, str]] = field(default_factory=list)
    saturated_samples: int = 0

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        i = RECORD_FIELDS.index(name)
        return np.fromiter((r[i] for r in self.records), dtype=float, count=len(self.records))


def run(plant_params: PlantParams, ref_cfg: ReferenceConfig, dist_profile: DisturbanceProfile,
        noise_cfg: NoiseConfig, obs_cfg: ObserverConfig, ctrl_cfg: ControllerConfig,
        sim_cfg: SimConfig) -> SimResult:
    """Simulate the closed loop and log one :class:`SimRecord` per period.

    Per sampling instant: draw noise and form the measured error, advance the
    observer with the previous duty, compute the new duty, log the sample with
    the true error-domain disturbance, then integrate the converter over the
    period with the duty held.

    Raises :class:`ObserverDivergence` if any observer state exceeds
    ``sim_cfg.divergence_threshold``.
    """
    if obs_cfg.b_hat != ctrl_cfg.b_hat:
        log.warning("observer b_hat %g differs from controller b_hat %g", obs_cfg.b_hat, ctrl_cfg.b_hat)
    ts, m = sim_cfg.ts, sim_cfg.substeps
    n_samples = sim_cfg.n_samples
    h = ts / m
    half_h = 0.5 * h

    reference = ReferenceGenerator(ref_cfg).sample(ts, n_samples).tolist()
    rng = make_rng(noise_cfg.seed if sim_cfg.seed is None else sim_cfg.seed)
    threshold = sim_cfg.divergence_threshold
    tau = sim_cfg.lpf_tau

    c, l, r, v_in = (plant_params.capacitance_c, plant_params.inductance_l,
                     plant_params.resistance_r, plant_params.v_in)
    a1, a2, b = plant_params.a1, plant_params.a2, plant_params.b
    b_hat = obs_cfg.b_hat
    inv_c, inv_cr, vin_l, inv_l = 1.0 / c, 1.0 / (c * r), v_in / l, 1.0 / l

    init = sim_cfg.initial_state
    if init is None:
        init = equilibrium(reference[0][0] / v_in, plant_params)
    v, i = float(init.v_o), float(init.i_l)

    prev_duty = 0.0
    observer = CascadeObserver(obs_cfg, ts)
    if sim_cfg.observer_init == "steady":
        v_r0, vd_r0, vdd_r0 = reference[0]
        f0 = dist_profile.segment_function(0.0)
        d0 = 0.0 if f0 is None else f0(0.0)
        dv0 = i * inv_c - v * inv_cr
        e0, ed0 = v_r0 - v, vd_r0 - dv0
        # duty that holds the loop at rest; F* depends on it through (b - b_hat)
        prev_duty = (vdd_r0 - a2 * v - a1 * dv0 - b * d0
                     + ctrl_cfg.kp * e0 + ctrl_cfg.kd * ed0) / b
        f_star0 = vdd_r0 - (a2 * v + a1 * dv0 + (b - b_hat) * prev_duty + b * d0)
        observer.state = consistent_state(e0, ed0, f_star0, obs_cfg)

    segment_function = dist_profile.segment_function
    r_vo, r_il = sim_cfg.r_vo, sim_cfg.r_il

    records: list[SimRecord] = []
    violations: list[tuple[float, str]] = []
    saturated = 0
    y_filt = None

    for k in range(n_samples):
        t = k * ts
        v_r, _, vdd_r = reference[k]
        n = noise_sample(rng, noise_cfg)
        y_o = v + n
        if tau is None:
            y_used = y_o
        elif y_filt is None:
            y_filt = y_used = y_o
        else:
            y_filt = y_used = lpf_step(y_filt, y_o, tau, ts)
        y = v_r - y_used

        observer.step(y, prev_duty)
        if not observer.max_abs() <= threshold:
            raise ObserverDivergence(
                f"observer state exceeded {threshold:g} at t={t:.6g} s", partial=records)
        est = observer.estimate()
        duty, unsat = control(y, est, ctrl_cfg)
        if duty != unsat:
            saturated += 1

        f = segment_function(t)
        d = 0.0 if f is None else f(t)
        dv = i * inv_c - v * inv_cr
        big_f = a2 * v + a1 * dv + (b - b_hat) * duty + b * d
        records.append(SimRecord(t, v_r, v, y_o, v_r - v, y, duty, unsat, d,
                                 est.z1_hat, est.z2_hat, est.z3_hat, vdd_r - big_f))

        if not (abs(v) < r_vo and abs(i) < r_il):
            if not violations:
                log.warning("plant left the bounded region at t=%.6g s (v_o=%.4g, i_l=%.4g)", t, v, i)
            violations.append((t, f"v_o={v:.6g}, i_l={i:.6g}"))

        # RK4 over the held period; segment membership is decided at the
        # substep midpoint so jumps on substep boundaries stay sharp
        for s in range(m):
            t0 = (k * m + s) * h
            f = segment_function(t0 + half_h)
            if f is None:
                d0 = dm = d1 = 0.0
            else:
                d0, dm, d1 = f(t0), f(t0 + half_h), f(t0 + h)
            u0, um, u1 = duty + d0, duty + dm, duty + d1
            k1v = i * inv_c - v * inv_cr
            k1i = vin_l * u0 - v * inv_l
            v2, i2 = v + half_h * k1v, i + half_h * k1i
            k2v = i2 * inv_c - v2 * inv_cr
            k2i = vin_l * um - v2 * inv_l
            v3, i3 = v + half_h * k2v, i + half_h * k2i
            k3v = i3 * inv_c - v3 * inv_cr
            k3i = vin_l * um - v3 * inv_l
            v4, i4 = v + h * k3v, i + h * k3i
            k4v = i4 * inv_c - v4 * inv_cr
            k4i = vin_l * u1 - v4 * inv_l
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            i += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i)
        if not (math.isfinite(v) and math.isfinite(i)):
            raise ObserverDivergence(f"plant state became non-finite at t={t:.6g} s", partial=records)
        prev_duty = duty

    return SimResult(records, violations, saturated)
