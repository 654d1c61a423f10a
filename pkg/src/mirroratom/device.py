"""Closed-form physics of a flux-tunable two-level atom in front of a mirror.

Maps an external flux bias to the atomic transition frequency, the
transition wavelength on the line, the mirror round-trip phase, and the
resulting radiative decay rate / vacuum spectral density.

Unit convention: every rate and frequency handled internally is angular
(rad/s); cyclic values (Hz) appear only at I/O boundaries and are named
``*_hz`` explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constants import HBAR, SPEED_OF_LIGHT, TWO_PI
from .errors import FluxOutOfTransmonRegime

# Below this |cos(pi*Phi/Phi0)| the two-level closed form is no longer
# trusted (it eventually predicts a negative frequency near half a flux
# quantum). Config-exposed; this is the library default.
TRANSMON_MIN_ABS_COS = 0.05


@dataclass(frozen=True)
class TransmonParams:
    """Maximum Josephson energy and charging energy, both as cyclic
    frequencies E/h in Hz."""

    ej0_hz: float
    ec_hz: float

    def __post_init__(self):
        if not (self.ej0_hz > 0.0 and self.ec_hz > 0.0):
            raise ValueError("ej0_hz and ec_hz must be positive")


@dataclass(frozen=True)
class FluxBias:
    """External flux in units of the flux quantum. Any real value is
    admissible; all derived quantities are periodic in 1 and even in sign."""

    phi_over_phi0: float


@dataclass(frozen=True)
class LineGeometry:
    """Transmission-line geometry: atom-mirror distance, effective
    dielectric constant and characteristic impedance."""

    length_m: float
    epsilon: float
    z0_ohm: float

    def __post_init__(self):
        if self.length_m <= 0.0:
            raise ValueError("length_m must be positive")
        if self.epsilon < 1.0:
            raise ValueError("epsilon must be >= 1")
        if self.z0_ohm <= 0.0:
            raise ValueError("z0_ohm must be positive")

    @property
    def velocity(self) -> float:
        """Propagation velocity v = c / sqrt(epsilon) in m/s."""
        return SPEED_OF_LIGHT / math.sqrt(self.epsilon)


@dataclass(frozen=True)
class CouplingParams:
    """Bare decay rate at a mirror antinode-equivalent reference, pure
    dephasing rate (both angular, rad/s) and capacitance ratio beta."""

    gamma1_bare: float
    gamma_phi: float
    beta: float

    def __post_init__(self):
        if self.gamma1_bare <= 0.0:
            raise ValueError("gamma1_bare must be positive")
        if self.gamma_phi < 0.0:
            raise ValueError("gamma_phi must be non-negative")
        if not (0.0 < self.beta < 1.0):
            raise ValueError("beta must lie in (0, 1)")


def cos_turns(x):
    """cos(2*pi*x) evaluated with exact quadrant reduction.

    Exact (returns +-1.0 or 0.0 bit-for-bit) whenever x is a quarter-turn
    representable in binary, which keeps node/antinode landmarks exact.
    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    t = 4.0 * np.mod(x, 1.0)
    q = np.floor(t)
    r = t - q
    a = 0.5 * np.pi * r
    q = q.astype(int) % 4
    out = np.where(
        q == 0, np.cos(a),
        np.where(q == 1, -np.sin(a), np.where(q == 2, -np.cos(a), np.sin(a))),
    )
    return float(out) if out.ndim == 0 else out


def transition_frequency(transmon: TransmonParams, flux: FluxBias,
                         min_abs_cos: float = TRANSMON_MIN_ABS_COS) -> float:
    """Atomic transition frequency omega_a in rad/s at the given flux.

    omega_a/2pi = sqrt(8 * ec * ej0 * |cos(pi*Phi/Phi0)|) - ec, the
    two-level closed form in the large-EJ/EC limit.

    Raises
    ------
    FluxOutOfTransmonRegime
        If |cos(pi*Phi/Phi0)| < min_abs_cos, or the closed form would
        return a non-positive frequency.
    """
    abs_cos = abs(math.cos(math.pi * flux.phi_over_phi0))
    if abs_cos < min_abs_cos:
        raise FluxOutOfTransmonRegime(
            f"|cos(pi*Phi/Phi0)| = {abs_cos:.4g} below validity bound "
            f"{min_abs_cos:.4g} at Phi/Phi0 = {flux.phi_over_phi0:.6g}")
    f_hz = math.sqrt(8.0 * transmon.ec_hz * transmon.ej0_hz * abs_cos) - transmon.ec_hz
    if f_hz <= 0.0:
        raise FluxOutOfTransmonRegime(
            f"closed form yields non-positive frequency at "
            f"Phi/Phi0 = {flux.phi_over_phi0:.6g}")
    return TWO_PI * f_hz


def flux_for_frequency(transmon: TransmonParams, f_hz: float,
                       min_abs_cos: float = TRANSMON_MIN_ABS_COS) -> FluxBias:
    """Invert the flux-frequency closed form on the principal branch.

    Returns the bias in [0, 0.5) whose transition frequency (cyclic f_hz)
    matches the request; raises FluxOutOfTransmonRegime when the target
    is outside the tunable band.
    """
    if f_hz <= 0.0:
        raise FluxOutOfTransmonRegime(f"target frequency {f_hz:.6g} Hz not positive")
    abs_cos = (f_hz + transmon.ec_hz) ** 2 / (8.0 * transmon.ec_hz * transmon.ej0_hz)
    if abs_cos > 1.0:
        raise FluxOutOfTransmonRegime(
            f"target {f_hz:.6g} Hz exceeds the maximum transition frequency")
    if abs_cos < min_abs_cos:
        raise FluxOutOfTransmonRegime(
            f"target {f_hz:.6g} Hz requires |cos| = {abs_cos:.4g} below the "
            f"validity bound {min_abs_cos:.4g}")
    return FluxBias(math.acos(abs_cos) / math.pi)


def tunable_band_hz(transmon: TransmonParams,
                    min_abs_cos: float = TRANSMON_MIN_ABS_COS) -> tuple[float, float]:
    """(f_lo, f_hi) cyclic band reachable within the validity bound."""
    f_hi = math.sqrt(8.0 * transmon.ec_hz * transmon.ej0_hz) - transmon.ec_hz
    f_lo = math.sqrt(8.0 * transmon.ec_hz * transmon.ej0_hz * min_abs_cos) - transmon.ec_hz
    if f_lo <= 0.0:
        raise FluxOutOfTransmonRegime(
            "device parameters give a non-positive frequency at the validity bound")
    return f_lo, f_hi


def wavelength(geometry: LineGeometry, omega_a: float) -> float:
    """Transition wavelength lambda = 2*pi*v / omega_a in meters."""
    if omega_a <= 0.0:
        raise ValueError("omega_a must be positive")
    return TWO_PI * geometry.velocity / omega_a


def roundtrip_phase(geometry: LineGeometry, lam: float) -> float:
    """Phase acquired over the atom->mirror->atom round trip, in rad.

    theta = 2 * (2*pi*L/lambda) + pi; the extra pi is the reflection
    phase at the short-circuit mirror. Not reduced modulo 2*pi.
    """
    if lam <= 0.0:
        raise ValueError("lambda must be positive")
    return 2.0 * (TWO_PI * geometry.length_m / lam) + math.pi


def phase_at_frequency(geometry: LineGeometry, omega_a: float) -> float:
    """Round-trip phase as a function of the atomic frequency (rad/s)."""
    return roundtrip_phase(geometry, wavelength(geometry, omega_a))


def gamma1_theory(coupling: CouplingParams, theta: float) -> float:
    """Radiative decay rate Gamma_1 = 2 * Gamma_1,b * cos^2(theta/2) in rad/s."""
    return 2.0 * coupling.gamma1_bare * math.cos(0.5 * theta) ** 2


def spectral_density_theory(omega_a: float, theta: float) -> tuple[float, float]:
    """Vacuum spectral density at the atom.

    Returns (S, s_quanta): S = 2*hbar*omega_a*cos^2(theta/2) in J (W/Hz)
    and its value normalized to hbar*omega_a, in [0, 2].
    """
    if omega_a <= 0.0:
        raise ValueError("omega_a must be positive")
    s_quanta = 2.0 * math.cos(0.5 * theta) ** 2
    return HBAR * omega_a * s_quanta, s_quanta


def gamma1_vacuum(k_per_sqrt_w: float, omega_a: float, theta: float) -> float:
    """Decay rate implied by the local vacuum spectral density,
    Gamma_1 = k^2 * S(omega_a), in rad/s.

    k is the atom-field coupling in Hz/sqrt(W) as conventionally quoted;
    with S in J this product is an angular rate.
    """
    s_joule, _ = spectral_density_theory(omega_a, theta)
    return k_per_sqrt_w ** 2 * s_joule


def quanta_vs_distance(l_over_lambda):
    """Spectral density in quanta as a function of normalized distance.

    s = 2*cos^2(theta/2) with theta = 4*pi*(L/lambda) + pi, evaluated as
    1 - cos(2*pi * 2*(L/lambda)) with exact quadrant reduction so that the
    node (0.5), free-space (0.625) and antinode (0.75) landmarks come out
    as exactly 0, 1 and 2. Accepts scalars or arrays.
    """
    return 1.0 - cos_turns(2.0 * np.asarray(l_over_lambda, dtype=float))


def gamma1_vs_distance(coupling: CouplingParams, l_over_lambda):
    """Theory curve Gamma_1(L/lambda) = Gamma_1,b * (1 + cos(theta)), rad/s."""
    return coupling.gamma1_bare * quanta_vs_distance(l_over_lambda)


def node_frequency_hz(geometry: LineGeometry, f_lo_hz: float, f_hi_hz: float,
                      order: int = 1) -> float:
    """Frequency at which the round-trip phase equals (2*order + 1)*pi,
    located by root finding inside [f_lo_hz, f_hi_hz].

    At this frequency the atom sits at a voltage node and decouples.
    """
    target = (2 * order + 1) * math.pi

    def mismatch(f_hz):
        return phase_at_frequency(geometry, TWO_PI * f_hz) - target

    lo, hi = mismatch(f_lo_hz), mismatch(f_hi_hz)
    if lo * hi > 0.0:
        raise ValueError(
            f"no order-{order} node inside [{f_lo_hz:.6g}, {f_hi_hz:.6g}] Hz")
    return brentq(mismatch, f_lo_hz, f_hi_hz, xtol=1e-6, rtol=8.9e-16)
