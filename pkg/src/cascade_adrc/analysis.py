"""Frequency-domain view of the observer/controller interconnection.

Three families of responses are assembled here:

* ``G_uy``: duty ratio from the measured control error, with the observer,
  selector and control law closed into one loop.
* ``G_zn``: noise to the error of the total-disturbance estimate, built from
  the aggregated observation-error dynamics, optionally with a first-order
  filter on the measured output.
* ``G_z1``: the extra path from the control error opened up by that filter.

All systems are continuous time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import mpmath
import numpy as np

from .controller import ControllerConfig
from .observer import ObserverConfig, gains_for_level

SHIFT = np.eye(3, k=1)
D_VEC = np.array([0.0, 1.0, 0.0])
B_VEC = np.array([0.0, 0.0, 1.0])
C_VEC = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class LtiSystem:
    """State-space quadruple ``x' = A x + B u``, ``y = C x + D u``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a, b, c, d = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (self.a, self.b, self.c, self.d))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"A must be square, got {a.shape}")
        if b.shape[0] != n or c.shape[1] != n or d.shape != (c.shape[0], b.shape[1]):
            raise ValueError(f"inconsistent dimensions A{a.shape} B{b.shape} C{c.shape} D{d.shape}")
        if not all(np.isfinite(m).all() for m in (a, b, c, d)):
            raise ValueError("state-space matrices must be finite")
        for name, m in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, m)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    def evaluate(self, s: complex) -> np.ndarray:
        """Transfer matrix ``C (sI - A)^-1 B + D`` at one complex point."""
        n = self.n_states
        return self.c @ np.linalg.solve(s * np.eye(n) - self.a, self.b.astype(complex)) + self.d

    def response(self, omegas: Sequence[float]) -> np.ndarray:
        """Complex response on ``j omega``; shape ``(len(omegas), outputs, inputs)``."""
        return np.array([self.evaluate(1j * w) for w in omegas])


@dataclass(frozen=True)
class FrequencyResponse:
    omegas: np.ndarray
    magnitudes: np.ndarray
    """Magnitude in dB."""
    phases: np.ndarray
    """Phase in degrees (unwrapped)."""

    @classmethod
    def from_complex(cls, omegas, values) -> "FrequencyResponse":
        omegas = validate_grid(omegas)
        values = np.asarray(values, dtype=complex)
        mag = np.abs(values)
        if not np.isfinite(mag).all() or (mag == 0).any():
            raise ValueError("response magnitude must be finite and non-zero on the grid")
        return cls(omegas, 20.0 * np.log10(mag), np.degrees(np.unwrap(np.angle(values))))

    @property
    def gain(self) -> np.ndarray:
        """Linear magnitude."""
        return 10.0 ** (self.magnitudes / 20.0)

    def at(self, omega: float) -> float:
        """Linear magnitude interpolated in log-log space."""
        return float(10.0 ** (np.interp(math.log10(omega), np.log10(self.omegas), self.magnitudes) / 20.0))


def log_grid(lo: float = 1.0, hi: float = 1.0e6, n: int = 400) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def validate_grid(omegas) -> np.ndarray:
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if omegas.ndim != 1 or len(omegas) == 0:
        raise ValueError("frequency grid must be a non-empty 1-D sequence")
    if not np.isfinite(omegas).all() or (omegas <= 0).any():
        raise ValueError("frequency grid must be finite and positive")
    if len(omegas) > 1 and not (np.diff(omegas) > 0).all():
        raise ValueError("frequency grid must be strictly increasing")
    return omegas


# --------------------------------------------------------------------------
# aggregated observation error
# --------------------------------------------------------------------------

class AggregatedErrorSystem(NamedTuple):
    """``zeta' = H zeta + delta dF*/dt + gamma n``; ``selector_row`` picks the
    error of the disturbance estimate (third entry of the last level)."""

    h_zeta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    selector_row: np.ndarray


def build_aggregated_error_system(obs_cfg: ObserverConfig) -> AggregatedErrorSystem:
    """Observation-error dynamics of all cascade levels stacked together.

    With ``zeta_i = z - xi_i - b sum_{j<i} xi_j3`` and measured ``y = e - n``::

        zeta_1' = (A - l_1 c') zeta_1 + l_1 n + b F*'
        zeta_i' = (A - l_i c') zeta_i + (l_i - b l_{i-1,3}) c' zeta_{i-1}
                  - b sum_{j<=i-2} (l_j3 - l_{j+1,3}) c' zeta_j + b l_13 n + b F*'

    ``H`` is block lower triangular with ``(s + w_i)^3`` on the diagonal.
    Noise enters with a plus sign for ``y = e - n``; magnitudes do not
    depend on that sign.
    """
    p = obs_cfg.levels
    gains = [np.array(gains_for_level(j, obs_cfg)) for j in range(1, p + 1)]
    n = 3 * p
    h = np.zeros((n, n))
    gamma = np.zeros(n)
    for i in range(p):
        rows = slice(3 * i, 3 * i + 3)
        h[rows, rows] = SHIFT - np.outer(gains[i], C_VEC)
        if i == 0:
            gamma[rows] = gains[0]
            continue
        h[rows, 3 * (i - 1):3 * i] += np.outer(gains[i] - B_VEC * gains[i - 1][2], C_VEC)
        for j in range(i - 1):
            h[3 * i + 2, 3 * j] -= gains[j][2] - gains[j + 1][2]
        gamma[3 * i + 2] = gains[0][2]
    delta = np.tile(B_VEC, p)
    selector = np.zeros(n)
    selector[-1] = 1.0
    return AggregatedErrorSystem(h, gamma, delta, selector)


def noise_error_system(obs_cfg: ObserverConfig, lpf_tau: float | None = None) -> LtiSystem:
    """LTI map to the disturbance-estimate error.

    Without a filter the only input is the noise ``n``. With ``lpf_tau`` the
    observer sees ``v_r - G_lpf (v_o + n)``, so its measurement is perturbed by
    ``w = G_lpf (z1 - n) - z1``; the filter state ``x_f = G_lpf (z1 - n)`` is
    appended and the inputs become ``(n, z1)``.
    """
    agg = build_aggregated_error_system(obs_cfg)
    if lpf_tau is None:
        return LtiSystem(agg.h_zeta, agg.gamma[:, None], agg.selector_row[None, :], np.zeros((1, 1)))
    if not lpf_tau > 0.0:
        raise ValueError("lpf_tau must be > 0")
    n = len(agg.gamma)
    a = np.zeros((n + 1, n + 1))
    a[:n, :n] = agg.h_zeta
    # the error system sees -w = z1 - x_f through gamma
    a[:n, n] = -agg.gamma
    a[n, n] = -1.0 / lpf_tau
    b = np.zeros((n + 1, 2))
    b[n, 0] = -1.0 / lpf_tau
    b[:n, 1] = agg.gamma
    b[n, 1] = 1.0 / lpf_tau
    c = np.append(agg.selector_row, 0.0)[None, :]
    return LtiSystem(a, b, c, np.zeros((1, 2)))


def noise_to_disturbance_error_response(obs_cfg: ObserverConfig, omegas=None,
                                        lpf_tau: float | None = None) -> FrequencyResponse:
    """``|G_zn(j omega)|`` from sensor noise to the disturbance-estimate error."""
    omegas = validate_grid(log_grid() if omegas is None else omegas)
    sys = noise_error_system(obs_cfg, lpf_tau)
    return FrequencyResponse.from_complex(omegas, sys.response(omegas)[:, 0, 0])


def output_to_disturbance_error_response(obs_cfg: ObserverConfig, omegas, lpf_tau: float) -> FrequencyResponse:
    """Path from the control error ``z1`` opened by the output filter."""
    omegas = validate_grid(omegas)
    sys = noise_error_system(obs_cfg, lpf_tau)
    return FrequencyResponse.from_complex(omegas, sys.response(omegas)[:, 0, 1])


def disturbance_to_estimate_error_response(obs_cfg: ObserverConfig, omegas) -> FrequencyResponse:
    """From the total disturbance ``z3 = F*`` to its estimation error."""
    omegas = validate_grid(omegas)
    agg = build_aggregated_error_system(obs_cfg)
    sys = LtiSystem(agg.h_zeta, agg.delta[:, None], agg.selector_row[None, :], np.zeros((1, 1)))
    values = sys.response(omegas)[:, 0, 0] * (1j * omegas)
    return FrequencyResponse.from_complex(omegas, values)


# --------------------------------------------------------------------------
# duty from measurement
# --------------------------------------------------------------------------

def observer_system(obs_cfg: ObserverConfig) -> LtiSystem:
    """Cascade observer with inputs ``(y, duty)`` and output ``z_hat`` (3 entries)."""
    p = obs_cfg.levels
    n = 3 * p
    a = np.zeros((n, n))
    b = np.zeros((n, 2))
    for i in range(p):
        l = np.array(gains_for_level(i + 1, obs_cfg))
        rows = slice(3 * i, 3 * i + 3)
        a[rows, rows] = SHIFT - np.outer(l, C_VEC)
        b[rows, 1] = -D_VEC * obs_cfg.b_hat
        if i == 0:
            b[rows, 0] = l
        else:
            a[rows, 3 * (i - 1)] += l
            for j in range(i):
                a[3 * i + 1, 3 * j + 2] += 1.0
    c = np.zeros((3, n))
    c[:, n - 3:] = np.eye(3)
    for j in range(p - 1):
        c[2, 3 * j + 2] += 1.0
    return LtiSystem(a, b, c, np.zeros((3, 2)))


def control_from_measurement_response(obs_cfg: ObserverConfig, ctrl_cfg: ControllerConfig,
                                      omegas=None) -> FrequencyResponse:
    """``G_uy`` with ``U = G_uy Y``, ignoring duty saturation.

    At each frequency the observer gives ``z_hat = G_y y + G_mu mu`` and the
    control law gives ``mu = T_y y + T_mu mu``; the algebraic loop is solved as
    ``mu / y = T_y / (1 - T_mu)``.
    """
    omegas = validate_grid(log_grid() if omegas is None else omegas)
    obs = observer_system(obs_cfg)
    k, b_hat = ctrl_cfg.k, ctrl_cfg.b_hat
    values = np.empty(len(omegas), dtype=complex)
    for idx, w in enumerate(omegas):
        g = obs.evaluate(1j * w)
        t_y = (g[2, 0] + 2.0 * k * g[1, 0] + k * k) / b_hat
        t_mu = (g[2, 1] + 2.0 * k * g[1, 1]) / b_hat
        denom = 1.0 - t_mu
        if abs(denom) < 1e-12:
            raise ArithmeticError(f"algebraic duty loop is singular at omega={w:g} rad/s")
        values[idx] = t_y / denom
    return FrequencyResponse.from_complex(omegas, values)


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

def eigenvalues(m, digits: int | None = 50) -> list[complex]:
    """All eigenvalues of a square matrix, sorted by (real, imag).

    By default a Hessenberg-QR eigensolver runs in ``digits`` decimal digits
    (mpmath) so that repeated, defective eigenvalues such as the triple
    observer poles come out accurate after rounding to double. ``digits=None``
    uses LAPACK instead.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    if m.shape[0] == 1:
        vals = [complex(m[0, 0])]
    elif digits is None:
        vals = [complex(v) for v in np.linalg.eigvals(m)]
    else:
        with mpmath.workdps(digits):
            vals = [complex(v) for v in mpmath.eig(mpmath.matrix(m.tolist()), left=False, right=False)]
    return sorted(vals, key=lambda v: (v.real, v.imag))


def error_dynamics_matrix(k: float) -> np.ndarray:
    """Closed-loop control-error matrix for ``k_p = k^2``, ``k_d = 2 k``."""
    return np.array([[0.0, 1.0], [-k * k, -2.0 * k]])
