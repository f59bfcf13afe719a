"""Cascade extended state observer (CESO) and its state selector.

Level 1 is a linear high-gain ESO driven by the measured control error ``y``.
Every further level tracks the first state of the level below and absorbs the
disturbance residue the slower levels could not reconstruct::

    xi_1' = A xi_1 - d b_hat mu + l_1 (y - xi_11)
    xi_i' = A xi_i + d (-b_hat mu + sum_{j<i} xi_j3) + l_i (xi_{i-1,1} - xi_i1)

with ``A`` the 3x3 shift matrix, ``d = (0, 1, 0)`` and
``l_j = (3 w_j, 3 w_j^2, w_j^3)``. With one level this is exactly the
standard linear ESO.

States are plain lists of ``3 * levels`` floats, level by level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import ConfigError

log = logging.getLogger(__name__)

EULER_WARN = 0.5
EULER_LIMIT = 2.0


@dataclass(frozen=True)
class ObserverConfig:
    """Observer tuning.

    Bandwidths follow the top-anchored rule ``w_j = omega_top / alpha**(p - j)``,
    so the last level always runs at ``omega_top`` and the first at
    ``omega_top / alpha**(p - 1)``.
    """

    levels: int = 3
    omega_top: float = 3600.0
    alpha: float = 3.0
    b_hat: float = 2.0e6

    def __post_init__(self):
        if not isinstance(self.levels, int) or isinstance(self.levels, bool) or self.levels < 1:
            raise ConfigError(f"levels must be a positive integer, got {self.levels!r}")
        if not (math.isfinite(self.omega_top) and self.omega_top > 0.0):
            raise ConfigError("omega_top must be > 0")
        if not (math.isfinite(self.alpha) and self.alpha > 1.0):
            raise ConfigError("alpha must exceed 1")
        if self.b_hat == 0.0 or not math.isfinite(self.b_hat):
            raise ConfigError("b_hat must be finite and non-zero")

    @classmethod
    def from_bottom(cls, omega_o1: float, alpha: float, levels: int, b_hat: float = 2.0e6):
        """Build from the first-level bandwidth instead of the top one."""
        return cls(levels=levels, omega_top=omega_o1 * alpha ** (levels - 1),
                   alpha=alpha, b_hat=b_hat)

    @property
    def bandwidths(self) -> tuple[float, ...]:
        p = self.levels
        return tuple(self.omega_top / self.alpha ** (p - j) for j in range(1, p + 1))

    @property
    def size(self) -> int:
        return 3 * self.levels

    def check_step(self, dt: float) -> None:
        """Validate forward-Euler stability of the fastest pole for step ``dt``."""
        ratio = self.omega_top * dt
        if ratio >= EULER_LIMIT:
            raise ConfigError(
                f"omega_top*dt = {ratio:.3g} >= {EULER_LIMIT}: forward Euler observer is unstable")
        if ratio > EULER_WARN:
            log.warning("omega_top*dt = %.3g > %.1f: Euler observer is poorly damped", ratio, EULER_WARN)


class ExtendedEstimate(NamedTuple):
    z1_hat: float
    z2_hat: float
    z3_hat: float


def gains_for_level(j: int, cfg: ObserverConfig) -> tuple[float, float, float]:
    """Gain vector ``(3 w, 3 w^2, w^3)`` of level ``j`` (1-based)."""
    if not 1 <= j <= cfg.levels:
        raise IndexError(f"level {j} outside 1..{cfg.levels}")
    w = cfg.bandwidths[j - 1]
    return 3.0 * w, 3.0 * w * w, w * w * w


def zero_state(cfg: ObserverConfig) -> list[float]:
    return [0.0] * cfg.size


def consistent_state(z1: float, z2: float, z3: float, cfg: ObserverConfig) -> list[float]:
    """State whose observation errors are all zero for the true ``(e, e', F*)``.

    Level 1 carries the whole extended state; higher levels carry the first two
    entries and no disturbance share, so the selector returns ``(z1, z2, z3)``.
    """
    return [z1, z2, z3] + [z1, z2, 0.0] * (cfg.levels - 1)


def _check_state(xi: Sequence[float], cfg: ObserverConfig) -> None:
    if len(xi) != cfg.size:
        raise ValueError(f"observer state has {len(xi)} entries, expected {cfg.size}")


def _derivatives(xi, y, duty, b_hat, gains):
    out = []
    bmu = b_hat * duty
    acc = 0.0
    meas = y
    for i, (l1, l2, l3) in enumerate(gains):
        x1, x2, x3 = xi[3 * i], xi[3 * i + 1], xi[3 * i + 2]
        inn = meas - x1
        drive = -bmu if i == 0 else -bmu + acc
        out.append(x2 + l1 * inn)
        out.append(x3 + drive + l2 * inn)
        out.append(l3 * inn)
        acc = x3 if i == 0 else acc + x3
        meas = x1
    return out


def observer_derivatives(xi: Sequence[float], y: float, duty: float,
                         cfg: ObserverConfig) -> list[float]:
    """Right-hand side of the cascade observer."""
    _check_state(xi, cfg)
    gains = [gains_for_level(j, cfg) for j in range(1, cfg.levels + 1)]
    return _derivatives(xi, y, duty, cfg.b_hat, gains)


def observer_step(xi: Sequence[float], y: float, duty: float, cfg: ObserverConfig,
                  dt: float) -> list[float]:
    """One forward-Euler update of the observer state."""
    cfg.check_step(dt)
    dx = observer_derivatives(xi, y, duty, cfg)
    return [x + dt * v for x, v in zip(xi, dx)]


def select_estimate(xi: Sequence[float], cfg: ObserverConfig) -> ExtendedEstimate:
    """Combine the levels: last level's state plus the lower levels' third entries."""
    _check_state(xi, cfg)
    base = 3 * (cfg.levels - 1)
    z3 = xi[base + 2]
    if cfg.levels > 1:
        z3 = z3 + sum(xi[3 * j + 2] for j in range(cfg.levels - 1))
    return ExtendedEstimate(xi[base], xi[base + 1], z3)


class CascadeObserver:
    """Stateful wrapper used inside the simulation loop.

    Same arithmetic as :func:`observer_step`, with gains precomputed.
    """

    def __init__(self, cfg: ObserverConfig, dt: float, state: Sequence[float] | None = None):
        cfg.check_step(dt)
        self.cfg = cfg
        self.dt = dt
        self._gains = [gains_for_level(j, cfg) for j in range(1, cfg.levels + 1)]
        self.state = list(state) if state is not None else zero_state(cfg)
        _check_state(self.state, cfg)

    def step(self, y: float, duty: float) -> None:
        dt = self.dt
        dx = _derivatives(self.state, y, duty, self.cfg.b_hat, self._gains)
        self.state = [x + dt * v for x, v in zip(self.state, dx)]

    def estimate(self) -> ExtendedEstimate:
        return select_estimate(self.state, self.cfg)

    def max_abs(self) -> float:
        return max(abs(x) for x in self.state)
