"""Error-domain ADRC law with a PD stabiliser tuned by a single bandwidth."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .observer import ExtendedEstimate


@dataclass(frozen=True)
class ControllerConfig:
    """Controller bandwidth ``k`` gives ``k_p = k**2`` and ``k_d = 2 k``."""

    k: float = 80.0
    b_hat: float = 2.0e6
    duty_min: float = 0.0
    duty_max: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ConfigError("controller k must be > 0")
        if self.b_hat == 0.0 or not math.isfinite(self.b_hat):
            raise ConfigError("b_hat must be finite and non-zero")
        if not self.duty_min < self.duty_max:
            raise ConfigError("duty_min must be below duty_max")

    @property
    def kp(self) -> float:
        return self.k * self.k

    @property
    def kd(self) -> float:
        return 2.0 * self.k


def control(y: float, estimate: ExtendedEstimate, cfg: ControllerConfig) -> tuple[float, float]:
    """Return ``(duty, duty_unsat)``.

    ``duty_unsat = (z3_hat + k_p y + k_d z2_hat) / b_hat``; the proportional
    term acts on the measured (noisy) error, not on ``z1_hat``.
    """
    if cfg.b_hat == 0.0:
        raise ValueError("b_hat must be non-zero")
    unsat = (estimate.z3_hat + cfg.kp * y + cfg.kd * estimate.z2_hat) / cfg.b_hat
    if not math.isfinite(unsat):
        raise ValueError(f"non-finite control signal {unsat!r}")
    duty = min(max(unsat, cfg.duty_min), cfg.duty_max)
    return duty, unsat
