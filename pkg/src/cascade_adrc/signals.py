"""Reference trajectory, external disturbance profile and sensor noise."""

from __future__ import annotations

import bisect
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError

DEFAULT_DISTURBANCE_AMPLITUDE = 0.04

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# reference
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceConfig:
    """Biased square wave passed through ``num / (a2 s^2 + a1 s + a0)``.

    The square starts at ``+amplitude`` and toggles every half period. With
    ``amplitude_is_peak_to_peak`` the swing is ``amplitude / 2`` instead.
    """

    bias: float = 7.0
    square_amplitude: float = 6.0
    period: float = 1.0
    filter_num: float = 4.0
    filter_den: tuple[float, float, float] = (0.025, 0.6, 4.0)
    amplitude_is_peak_to_peak: bool = False

    def __post_init__(self):
        object.__setattr__(self, "filter_den", tuple(float(c) for c in self.filter_den))
        if len(self.filter_den) != 3:
            raise ConfigError("reference.filter_den must have exactly three coefficients")
        if not self.period > 0.0:
            raise ConfigError("reference.period must be > 0")
        a2, a1, a0 = self.filter_den
        # second order: Hurwitz iff all coefficients share a sign
        if not (a2 > 0 and a1 > 0 and a0 > 0):
            raise ConfigError("reference filter denominator is not Hurwitz")
        if not math.isclose(self.filter_num / a0, 1.0, rel_tol=1e-12):
            raise ConfigError("reference filter must have unit DC gain (num == den[-1])")

    @property
    def swing(self) -> float:
        return self.square_amplitude / 2.0 if self.amplitude_is_peak_to_peak else self.square_amplitude


class ReferenceGenerator:
    """Exact propagation of the reference filter driven by the square wave.

    The filter is realised in controllable canonical form with state
    ``(x, dx/dt)``; the second derivative comes from the state equation, so all
    three returned signals are exact (no numerical differentiation).
    """

    def __init__(self, cfg: ReferenceConfig):
        self.cfg = cfg
        a2, a1, a0 = cfg.filter_den
        self._a = (a2, a1, a0)
        self._f = np.array([[0.0, 1.0], [-a0 / a2, -a1 / a2]])
        self._g = np.array([0.0, cfg.filter_num / a2])
        self._half = cfg.period / 2.0
        self._swing = cfg.swing
        self._switch_states = [np.zeros(2)]
        self._phi_half, self._gam_half = self._transition(self._half)

    def _transition(self, tau: float):
        m = np.zeros((3, 3))
        m[:2, :2] = self._f * tau
        m[:2, 2] = self._g * tau
        e = expm(m)
        return e[:2, :2], e[:2, 2]

    def square(self, n: int) -> float:
        """Square-wave level on half-period number ``n``."""
        return self._swing if n % 2 == 0 else -self._swing

    def _state_at_switch(self, n: int) -> np.ndarray:
        states = self._switch_states
        while len(states) <= n:
            k = len(states) - 1
            states.append(self._phi_half @ states[k] + self._gam_half * self.square(k))
        return states[n]

    def _output(self, x: np.ndarray, u: float) -> tuple[float, float, float]:
        a2, a1, a0 = self._a
        acc = (self.cfg.filter_num * u - a1 * x[1] - a0 * x[0]) / a2
        return self.cfg.bias + float(x[0]), float(x[1]), float(acc)

    def at(self, t: float) -> tuple[float, float, float]:
        if t < 0.0:
            raise ValueError("reference is defined for t >= 0 only")
        n = int(t // self._half)
        tau = t - n * self._half
        phi, gam = self._transition(tau)
        u = self.square(n)
        x = phi @ self._state_at_switch(n) + gam * u
        return self._output(x, u)

    def sample(self, ts: float, n_samples: int) -> np.ndarray:
        """Reference at ``t_k = k ts`` for ``k < n_samples``; shape ``(n, 3)``.

        Uses exact one-step propagation when the half period is a whole
        number of samples, otherwise falls back to :meth:`at` per sample.
        """
        out = np.empty((n_samples, 3))
        ratio = self._half / ts
        per_half = round(ratio)
        if per_half < 1 or abs(ratio - per_half) > 1e-9 * ratio:
            for k in range(n_samples):
                out[k] = self.at(k * ts)
            return out
        phi, gam = self._transition(ts)
        for k in range(n_samples):
            n, r = divmod(k, per_half)
            u = self.square(n)
            if r == 0:
                x = self._state_at_switch(n)
            out[k] = self._output(x, u)
            x = phi @ x + gam * u
        return out


@functools.lru_cache(maxsize=32)
def _generator(cfg: ReferenceConfig) -> ReferenceGenerator:
    return ReferenceGenerator(cfg)


def reference_at(t: float, cfg: ReferenceConfig) -> tuple[float, float, float]:
    """``(v_r, dv_r/dt, d^2 v_r/dt^2)`` at time ``t``."""
    return _generator(cfg).at(t)


def reference_bounds(cfg: ReferenceConfig, horizon: float, ts: float) -> dict[int, float]:
    """Suprema of ``|v_r^(j)|`` for j = 0, 1, 2 over the sampled horizon.

    The j = 3 entry is an analytic bound: away from square-wave switches the
    input is constant, so ``v_r''' = -(a1 v_r'' + a0 v_r') / a2``.
    """
    samples = _generator(cfg).sample(ts, int(round(horizon / ts)) + 1)
    sup = np.max(np.abs(samples), axis=0)
    a2, a1, a0 = cfg.filter_den
    # v_r'' jumps at switches; bound it by the post-jump value as well
    acc_peak = max(sup[2], 2.0 * cfg.swing * cfg.filter_num / a2)
    return {0: float(sup[0]), 1: float(sup[1]), 2: float(acc_peak),
            3: (abs(a1) * acc_peak + abs(a0) * sup[1]) / a2}


def check_reference_bounds(cfg: ReferenceConfig, horizon: float, ts: float,
                           r_vr: float) -> list[str]:
    problems = [f"sup|v_r^({j})| = {v:.6g} exceeds r_vr = {r_vr:g}"
                for j, v in reference_bounds(cfg, horizon, ts).items() if v > r_vr]
    for msg in problems:
        log.warning("reference bound: %s", msg)
    return problems


# --------------------------------------------------------------------------
# external disturbance
# --------------------------------------------------------------------------

_SEGMENT_KINDS = {
    "constant": {"value"},
    "step": {"at", "after", "before"},
    "sine": {"amplitude", "freq_hz", "phase", "offset"},
    "ramp": {"slope", "offset"},
}


@dataclass(frozen=True)
class Segment:
    """One piece of the disturbance on ``[t_start, t_end)``.

    Kinds and their parameters:

    ``constant``  ``value``
    ``step``      ``at``, ``after`` and optional ``before`` (default 0)
    ``sine``      ``amplitude``, ``freq_hz``, optional ``phase`` and ``offset``;
                  evaluated on absolute time
    ``ramp``      ``slope`` and optional ``offset``; ``offset + slope (t - t_start)``
    """

    t_start: float
    t_end: float
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _SEGMENT_KINDS:
            raise ConfigError(f"unknown disturbance kind {self.kind!r}")
        unknown = set(self.params) - _SEGMENT_KINDS[self.kind]
        if unknown:
            raise ConfigError(f"{self.kind} segment: unknown parameters {sorted(unknown)}")
        if not self.t_end > self.t_start >= 0.0:
            raise ConfigError(f"segment needs 0 <= t_start < t_end, got [{self.t_start}, {self.t_end})")
        required = {"constant": ("value",), "step": ("at", "after"),
                    "sine": ("amplitude", "freq_hz"), "ramp": ("slope",)}[self.kind]
        for name in required:
            if name not in self.params:
                raise ConfigError(f"{self.kind} segment requires {name!r}")
        object.__setattr__(self, "params", dict(self.params))

    def function(self) -> Callable[[float], float]:
        p = self.params
        if self.kind == "constant":
            v = float(p["value"])
            return lambda t: v
        if self.kind == "step":
            at, before, after = float(p["at"]), float(p.get("before", 0.0)), float(p["after"])
            return lambda t: after if t >= at else before
        if self.kind == "sine":
            a, w = float(p["amplitude"]), 2.0 * math.pi * float(p["freq_hz"])
            ph, off = float(p.get("phase", 0.0)), float(p.get("offset", 0.0))
            return lambda t: off + a * math.sin(w * t + ph)
        slope, off, t0 = float(p["slope"]), float(p.get("offset", 0.0)), self.t_start
        return lambda t: off + slope * (t - t0)

    def bounds(self) -> tuple[float, float]:
        """Analytic ``(sup |d|, sup |d'|)`` inside the segment."""
        p = self.params
        if self.kind == "constant":
            return abs(p["value"]), 0.0
        if self.kind == "step":
            return max(abs(p.get("before", 0.0)), abs(p["after"])), 0.0
        if self.kind == "sine":
            a = abs(p["amplitude"])
            return abs(p.get("offset", 0.0)) + a, a * 2.0 * math.pi * abs(p["freq_hz"])
        f = self.function()
        return max(abs(f(self.t_start)), abs(f(self.t_end))), abs(p["slope"])

    def discontinuities(self) -> list[float]:
        f = self.function()
        out = [self.t_start, self.t_end]
        if self.kind == "step" and self.t_start < self.params["at"] < self.t_end:
            out.append(float(self.params["at"]))
        # a segment that starts or ends at zero value is continuous there
        return [t for t in out if not (t in (self.t_start, self.t_end) and abs(f(t)) < 1e-12)]


@dataclass(frozen=True)
class DisturbanceProfile:
    """Ordered, non-overlapping disturbance segments; zero outside them."""

    segments: tuple[Segment, ...] = ()
    r_d: float = 1.0
    r_ddot: float = 1.0e3
    min_dwell: float = 1.0e-3

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(**s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        for prev, nxt in zip(segs, segs[1:]):
            if nxt.t_start < prev.t_end:
                raise ConfigError(
                    f"disturbance segments overlap or are unordered: "
                    f"[{prev.t_start}, {prev.t_end}) and [{nxt.t_start}, {nxt.t_end})")
        for s in segs:
            d_max, dd_max = s.bounds()
            if d_max > self.r_d:
                raise ConfigError(f"{s.kind} segment at t={s.t_start}: |d| up to {d_max:g} exceeds r_d={self.r_d:g}")
            if dd_max > self.r_ddot:
                raise ConfigError(f"{s.kind} segment at t={s.t_start}: |d'| up to {dd_max:g} exceeds r_ddot={self.r_ddot:g}")
        jumps = sorted({t for s in segs for t in s.discontinuities()})
        gaps = np.diff(jumps)
        if len(gaps) and gaps.min() < self.min_dwell:
            log.warning("disturbance discontinuities only %.3g s apart (min_dwell %.3g s)",
                        gaps.min(), self.min_dwell)
        self._index()

    def _index(self) -> None:
        object.__setattr__(self, "_starts", [s.t_start for s in self.segments])
        object.__setattr__(self, "_funcs", [s.function() for s in self.segments])

    def __getstate__(self):
        # closures are rebuilt on unpickling so profiles can cross process boundaries
        return {k: v for k, v in self.__dict__.items() if k not in ("_starts", "_funcs")}

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._index()

    @classmethod
    def default(cls) -> "DisturbanceProfile":
        """Step of 0.04 on [1, 2) s, then 0.04 sin(2 pi 10 t) on [2, 3) s.

        0.04 is the largest round amplitude for which the ideal steady duty
        ``v_r / V_in +- A`` stays inside [0.01, 0.99] over the 1..13 V
        reference swing, so the duty never has to saturate to reject it.
        """
        return cls(segments=(
            Segment(1.0, 2.0, "constant", {"value": DEFAULT_DISTURBANCE_AMPLITUDE}),
            Segment(2.0, 3.0, "sine", {"amplitude": DEFAULT_DISTURBANCE_AMPLITUDE, "freq_hz": 10.0}),
        ))

    def segment_function(self, t: float) -> Callable[[float], float] | None:
        """Formula of the segment containing ``t`` (``None`` outside all)."""
        i = bisect.bisect_right(self._starts, t) - 1
        if i >= 0 and t < self.segments[i].t_end:
            return self._funcs[i]
        return None

    def discontinuities(self) -> list[float]:
        return sorted({t for s in self.segments for t in s.discontinuities()})


def disturbance_at(t: float, profile: DisturbanceProfile) -> float:
    if t < 0.0:
        raise ValueError("disturbance is defined for t >= 0 only")
    f = profile.segment_function(t)
    return 0.0 if f is None else f(t)


# --------------------------------------------------------------------------
# measurement noise
# --------------------------------------------------------------------------

NOISE_DISTRIBUTIONS = ("uniform", "truncated-gaussian")


@dataclass(frozen=True)
class NoiseConfig:
    """Bounded sensor noise, one sample per controller period.

    The truncated Gaussian has standard deviation ``amplitude / 3`` before
    truncation to ``[-amplitude, amplitude]``.
    """

    amplitude: float = 0.02
    distribution: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude >= 0.0:
            raise ConfigError("noise.amplitude must be >= 0")
        if self.distribution not in NOISE_DISTRIBUTIONS:
            raise ConfigError(f"noise.distribution must be one of {NOISE_DISTRIBUTIONS}")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def noise_sample(rng: np.random.Generator, cfg: NoiseConfig) -> float:
    r = cfg.amplitude
    if r == 0.0:
        return 0.0
    if cfg.distribution == "uniform":
        return float(rng.uniform(-r, r))
    sigma = r / 3.0
    while True:
        n = float(rng.normal(0.0, sigma))
        if abs(n) <= r:
            return n


def noise_sequence(rng: np.random.Generator, cfg: NoiseConfig, n: int) -> list[float]:
    """``n`` consecutive draws, identical to calling :func:`noise_sample` n times."""
    return [noise_sample(rng, cfg) for _ in range(n)]
