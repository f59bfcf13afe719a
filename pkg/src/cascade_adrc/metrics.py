"""Integral quality criteria and the steady-window ripple measure."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

CRITERIA_KEYS = ("iae", "effort", "jitter", "saturation_fraction", "ripple_amplitude", "diverged")


@dataclass(frozen=True)
class CriteriaReport:
    iae: float
    """Integral of |e| in V s."""
    effort: float
    """Integral of |duty| in s."""
    jitter: float
    """Total variation of the sampled duty."""
    saturation_fraction: float
    ripple_amplitude: float
    """Half-range of the measured control error over a steady window, V."""
    diverged: bool = False

    def __post_init__(self):
        for name in CRITERIA_KEYS[:-1]:
            v = getattr(self, name)
            if math.isnan(v) or v < 0.0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


def _series(t, x) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.shape != x.shape or t.ndim != 1:
        raise ValueError("t and x must be 1-D arrays of equal length")
    if len(t) < 2:
        raise ValueError("need at least 2 samples")
    return t, x


def integral_abs(t, x) -> float:
    """Trapezoidal integral of ``|x|`` on a uniform grid."""
    t, x = _series(t, x)
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=0.0) or dt[0] <= 0.0:
        raise ValueError("integral_abs needs uniform, increasing sampling")
    return float(np.trapezoid(np.abs(x), t))


def total_variation(t, x) -> float:
    """Discrete total variation ``sum |x[i+1] - x[i]|``."""
    _, x = _series(t, x)
    return float(np.abs(np.diff(x)).sum())


def window_mask(t, window: tuple[float, float]) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"window must satisfy t0 < t1, got {window}")
    if len(t) == 0 or t0 < t[0] or t1 > t[-1] + (t[-1] - t[0]) / max(len(t) - 1, 1):
        raise ValueError(f"window {window} is outside the record span")
    return (t >= t0) & (t < t1)


def ripple_amplitude(t, x, window: tuple[float, float]) -> float:
    """Half of the peak-to-peak excursion about the window mean."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    mask = window_mask(t, window)
    if not mask.any():
        raise ValueError(f"window {window} contains no samples")
    w = x[mask] - x[mask].mean()
    return float((w.max() - w.min()) / 2.0)


def saturation_fraction(duty_unsat, duty_min: float = 0.0, duty_max: float = 1.0) -> float:
    """Fraction of samples whose unclamped duty left ``[duty_min, duty_max]``."""
    u = np.asarray(duty_unsat, dtype=float)
    if len(u) == 0:
        raise ValueError("need at least 1 sample")
    return float(((u < duty_min) | (u > duty_max)).mean())


def evaluate(result, ripple_window: tuple[float, float] = (0.2, 0.5),
             duty_min: float = 0.0, duty_max: float = 1.0, diverged: bool = False) -> CriteriaReport:
    """Criteria for one simulation record set (a ``SimResult``).

    The ripple is taken on the error the controller actually sees
    (``y_meas``), so measurement noise and output filtering both show up in it.
    """
    t = result.column("t")
    duty = result.column("duty")
    return CriteriaReport(
        iae=integral_abs(t, result.column("e")),
        effort=integral_abs(t, duty),
        jitter=total_variation(t, duty),
        saturation_fraction=saturation_fraction(result.column("duty_unsat"), duty_min, duty_max),
        ripple_amplitude=ripple_amplitude(t, result.column("y_meas"), ripple_window),
        diverged=diverged,
    )
