"""Driven two-level dynamics and the coherent reflection coefficient.

The optical Bloch equations are written in the frame rotating at the
probe frequency, so no optical-frequency oscillation is ever integrated:

    d<s_->/dt = (-i*delta - gamma) <s_-> + Omega <s_z> / 2
    d<s_z>/dt = -Gamma_1 (1 + <s_z>) - 2 Omega Re<s_->

with delta = omega_a - omega_p, gamma = Gamma_1/2 + Gamma_phi, and a real
non-negative Rabi rate Omega (the drive phase is absorbed into the
definition of s_+-). All rates are angular (rad/s).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRates, StepUnderflow

# Shared trajectory/step constants.
STEP_SAFETY = 0.01          # h <= STEP_SAFETY / fastest rate
MIN_STEP_S = 1e-18          # below this, raise StepUnderflow
_STATE_TOL = 1e-9           # slack on the physical-state bound


@dataclass(frozen=True)
class RateSet:
    """Decay, pure-dephasing and (derived) decoherence rates in rad/s.

    gamma = gamma1/2 + gamma_phi is computed at construction and cannot
    drift out of sync with its parts.
    """

    gamma1: float
    gamma_phi: float
    gamma: float = field(init=False)

    def __post_init__(self):
        if self.gamma1 < 0.0 or self.gamma_phi < 0.0:
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "gamma", 0.5 * self.gamma1 + self.gamma_phi)


@dataclass(frozen=True)
class DriveSettings:
    """Probe frequency, Rabi rate and detuning delta = omega_a - omega_p,
    all angular (rad/s)."""

    omega_p: float
    rabi: float
    detuning: float

    def __post_init__(self):
        if self.rabi < 0.0:
            raise ValueError("rabi must be non-negative")

    @classmethod
    def for_atom(cls, omega_a: float, omega_p: float, rabi: float) -> "DriveSettings":
        """Build with the detuning fixed to omega_a - omega_p exactly."""
        return cls(omega_p=omega_p, rabi=rabi, detuning=omega_a - omega_p)


@dataclass(frozen=True)
class AtomState:
    """Expectation values <s_-> (complex) and <s_z> (real)."""

    sigma_minus: complex
    sigma_z: float

    def __post_init__(self):
        if abs(self.sigma_z) > 1.0 + _STATE_TOL:
            raise ValueError("<s_z> outside [-1, 1]")
        if abs(self.sigma_minus) > 0.5 + _STATE_TOL:
            raise ValueError("|<s_->| exceeds 1/2")
        if 4.0 * abs(self.sigma_minus) ** 2 + self.sigma_z ** 2 > 1.0 + _STATE_TOL:
            raise ValueError("state violates 4|<s_->|^2 + <s_z>^2 <= 1")

    @property
    def sigma_plus(self) -> complex:
        return self.sigma_minus.conjugate()


GROUND_STATE = AtomState(sigma_minus=0j, sigma_z=-1.0)


def bloch_steady_state(rates: RateSet, drive: DriveSettings) -> AtomState:
    """Stationary solution of the Bloch equations.

    For a resonant drive this reduces to
    <s_z> = -Gamma_1*gamma / (Gamma_1*gamma + Omega^2),
    <s_-> = Omega <s_z> / (2*gamma).

    Raises
    ------
    DegenerateRates
        When gamma == 0 with a finite drive (no stationary point).
    """
    if drive.rabi == 0.0:
        return GROUND_STATE
    if rates.gamma <= 0.0:
        raise DegenerateRates("gamma = 0 with finite drive has no steady state")
    g2d2 = rates.gamma ** 2 + drive.detuning ** 2
    sigma_z = -rates.gamma1 * g2d2 / (rates.gamma1 * g2d2 + drive.rabi ** 2 * rates.gamma)
    sigma_minus = drive.rabi * sigma_z / (2.0 * (rates.gamma + 1j * drive.detuning))
    return AtomState(sigma_minus=sigma_minus, sigma_z=sigma_z)


def _bloch_rhs(rates: RateSet, drive: DriveSettings, s: complex, z: float):
    ds = (-1j * drive.detuning - rates.gamma) * s + 0.5 * drive.rabi * z
    dz = -rates.gamma1 * (1.0 + z) - 2.0 * drive.rabi * s.real
    return ds, dz


def default_step(rates: RateSet, drive: DriveSettings) -> float:
    """Fixed RK4 step honoring h <= 0.01 / max(gamma, Omega, |delta|, Gamma_1)."""
    fastest = max(rates.gamma, drive.rabi, abs(drive.detuning), rates.gamma1)
    if fastest == 0.0:
        return math.inf
    h = STEP_SAFETY / fastest
    if h < MIN_STEP_S:
        raise StepUnderflow(f"required step {h:.3g} s below {MIN_STEP_S:g} s")
    return h


@dataclass
class BlochTrajectory:
    """Fixed-step trajectory; sigma_plus is the conjugate of sigma_minus."""

    times: np.ndarray
    sigma_minus: np.ndarray
    sigma_z: np.ndarray

    @property
    def sigma_plus(self) -> np.ndarray:
        return np.conjugate(self.sigma_minus)

    @property
    def final(self) -> AtomState:
        return AtomState(sigma_minus=complex(self.sigma_minus[-1]),
                         sigma_z=float(self.sigma_z[-1]))


def _rk4_step(rates, drive, s, z, h):
    k1s, k1z = _bloch_rhs(rates, drive, s, z)
    k2s, k2z = _bloch_rhs(rates, drive, s + 0.5 * h * k1s, z + 0.5 * h * k1z)
    k3s, k3z = _bloch_rhs(rates, drive, s + 0.5 * h * k2s, z + 0.5 * h * k2z)
    k4s, k4z = _bloch_rhs(rates, drive, s + h * k3s, z + h * k3z)
    s = s + (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    z = z + (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
    return s, z


def integrate_bloch(rates: RateSet, drive: DriveSettings, initial: AtomState,
                    duration: float, step: float | None = None) -> BlochTrajectory:
    """Integrate the Bloch equations with classic fixed-step RK4.

    The step defaults to 0.01 over the fastest rate in play; a caller-
    supplied step is clipped to that bound. The full trajectory is
    recorded; each call owns its buffers.
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    h = default_step(rates, drive)
    if step is not None:
        if step <= 0.0:
            raise ValueError("step must be positive")
        h = min(step, h)
    if not math.isfinite(h):
        h = duration
    n_steps = max(1, math.ceil(duration / h))
    h = duration / n_steps

    times = np.linspace(0.0, duration, n_steps + 1)
    sig_m = np.empty(n_steps + 1, dtype=complex)
    sig_z = np.empty(n_steps + 1, dtype=float)
    s, z = complex(initial.sigma_minus), float(initial.sigma_z)
    sig_m[0], sig_z[0] = s, z
    for i in range(1, n_steps + 1):
        s, z = _rk4_step(rates, drive, s, z, h)
        sig_m[i], sig_z[i] = s, z
    return BlochTrajectory(times=times, sigma_minus=sig_m, sigma_z=sig_z)


def steady_state_by_integration(rates: RateSet, drive: DriveSettings,
                                initial: AtomState = GROUND_STATE,
                                derivative_tol: float = 1e-12,
                                max_duration_factor: float = 1e4) -> AtomState:
    """Time-domain oracle for the stationary state.

    Integrates in chunks until every component derivative is below
    derivative_tol * max(gamma, Gamma_1), or a duration cap of
    max_duration_factor / gamma is reached.
    """
    scale = max(rates.gamma, rates.gamma1)
    if scale == 0.0:
        if drive.rabi > 0.0:
            raise DegenerateRates("gamma = 0 with finite drive has no steady state")
        return initial
    h = default_step(rates, drive)
    if not math.isfinite(h):
        return initial
    cap = max_duration_factor / scale if rates.gamma == 0.0 else max_duration_factor / rates.gamma
    s, z = complex(initial.sigma_minus), float(initial.sigma_z)
    t = 0.0
    chunk = 200
    while t < cap:
        for _ in range(chunk):
            s, z = _rk4_step(rates, drive, s, z, h)
        t += chunk * h
        ds, dz = _bloch_rhs(rates, drive, s, z)
        if max(abs(ds), abs(dz)) < derivative_tol * scale:
            break
    return AtomState(sigma_minus=s, sigma_z=z)


def reflection_weak(rates: RateSet, detuning) -> complex:
    """Weak-probe reflection r_p = -1 + Gamma_1 / (gamma + i*delta).

    Vectorizes over detuning (rad/s).
    """
    if rates.gamma <= 0.0:
        raise ValueError("reflection_weak requires gamma > 0")
    detuning = np.asarray(detuning, dtype=float)
    rp = -1.0 + rates.gamma1 / (rates.gamma + 1j * detuning)
    return complex(rp) if rp.ndim == 0 else rp


def reflection_power(rates: RateSet, rabi) -> float:
    """Resonant reflection r_p = -1 + Gamma_1^2 / (Gamma_1*gamma + Omega^2).

    Vectorizes over the Rabi rate (rad/s).
    """
    if rates.gamma <= 0.0:
        raise ValueError("reflection_power requires gamma > 0")
    rabi = np.asarray(rabi, dtype=float)
    rp = -1.0 + rates.gamma1 ** 2 / (rates.gamma1 * rates.gamma + rabi ** 2)
    return float(rp) if rp.ndim == 0 else rp


def reflection_full(rates: RateSet, drive: DriveSettings, state: AtomState,
                    l_over_lambda: float = 0.0,
                    include_global_phase: bool = False) -> complex:
    """Reflection coefficient from an arbitrary atomic state,
    r_p = -(1 + 2*Gamma_1*<s_->/Omega).

    The propagation phase exp(i*4*pi*L/lambda) does not affect the
    dynamics and is omitted unless include_global_phase is set (raw
    measured data may carry it).
    """
    if drive.rabi <= 0.0:
        raise ValueError("reflection_full needs a finite drive; "
                         "use reflection_weak for the undriven limit")
    rp = -(1.0 + 2.0 * rates.gamma1 * state.sigma_minus / drive.rabi)
    if include_global_phase:
        rp *= cmath.exp(4j * math.pi * l_over_lambda)
    return rp
