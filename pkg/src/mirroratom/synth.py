"""Synthetic measurement generator: line scans, flux maps, power sweeps.

Noise is additive circular complex Gaussian on r_p, sigma per quadrature,
drawn from a counter-based generator keyed by (master seed, trace index,
point index) so that any point can be regenerated independently of order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import DeviceConfig
from .constants import HBAR, TWO_PI
from .device import (FluxBias, flux_for_frequency, phase_at_frequency,
                     quanta_vs_distance, transition_frequency, tunable_band_hz)
from .errors import GridOutsideBand, MissingTrueCoupling
from .scattering import RateSet, reflection_power, reflection_weak


@dataclass(frozen=True)
class SpectroscopyTrace:
    """Complex reflection versus probe frequency at one flux bias."""

    flux: FluxBias
    omega_p_hz: np.ndarray
    rp: np.ndarray
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        omega = np.asarray(self.omega_p_hz, dtype=float)
        rp = np.asarray(self.rp, dtype=complex)
        if omega.shape != rp.shape or omega.ndim != 1:
            raise ValueError("omega_p_hz and rp must be 1-d arrays of equal length")
        if np.any(np.diff(omega) <= 0.0):
            raise ValueError("omega_p_hz must be strictly increasing")
        object.__setattr__(self, "omega_p_hz", omega)
        object.__setattr__(self, "rp", rp)

    def __len__(self):
        return self.omega_p_hz.size


@dataclass(frozen=True)
class PowerSweep:
    """Complex reflection versus incident power at resonance, one bias."""

    flux: FluxBias
    power_w: np.ndarray
    rp: np.ndarray
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        power = np.asarray(self.power_w, dtype=float)
        rp = np.asarray(self.rp, dtype=complex)
        if power.shape != rp.shape or power.ndim != 1:
            raise ValueError("power_w and rp must be 1-d arrays of equal length")
        if np.any(power <= 0.0) or np.any(np.diff(power) <= 0.0):
            raise ValueError("power_w must be positive and strictly increasing")
        object.__setattr__(self, "power_w", power)
        object.__setattr__(self, "rp", rp)

    def __len__(self):
        return self.power_w.size


def theory_rates(config: DeviceConfig, flux: FluxBias) -> tuple[float, RateSet]:
    """Ground-truth (omega_a, rates) at a bias, per the configured model.

    "bare": Gamma_1 = Gamma_1,b * (1 + cos(theta)) with the constant
    reference rate from the config. "vacuum": Gamma_1 = k^2 * S(omega_a),
    tying the decay rate to the local spectral density through the true
    coupling constant (required in the config).
    """
    omega_a = transition_frequency(config.transmon(), flux,
                                   config.transmon_min_abs_cos)
    x = config.length_m * (omega_a / TWO_PI) / config.geometry().velocity
    quanta = quanta_vs_distance(x)
    if config.lifetime_model == "bare":
        gamma1 = TWO_PI * config.gamma1_bare_hz * quanta
    else:
        if config.k_true_hz_per_sqrt_w is None:
            raise MissingTrueCoupling(
                "lifetime_model 'vacuum' needs k_true_hz_per_sqrt_w")
        gamma1 = config.k_true_hz_per_sqrt_w ** 2 * HBAR * omega_a * quanta
    return omega_a, RateSet(gamma1=gamma1, gamma_phi=TWO_PI * config.gamma_phi_hz)


def _point_noise(seed: int, trace_index: int, n_points: int, sigma: float) -> np.ndarray:
    """Complex noise vector; each entry keyed by (seed, trace, point)."""
    if sigma == 0.0:
        return np.zeros(n_points, dtype=complex)
    if not (0 <= trace_index < 2 ** 32):
        raise ValueError("trace_index out of range")
    out = np.empty(n_points, dtype=complex)
    key = np.zeros(2, dtype=np.uint64)
    key[0] = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    hi = np.uint64(trace_index) << np.uint64(32)
    for i in range(n_points):
        key[1] = hi | np.uint64(i)
        rng = np.random.Generator(np.random.Philox(key=key))
        re, im = rng.standard_normal(2)
        out[i] = sigma * (re + 1j * im)
    return out


def device_band_hz(config: DeviceConfig) -> tuple[float, float]:
    """Tunable cyclic band within the flux-validity bound."""
    return tunable_band_hz(config.transmon(), config.transmon_min_abs_cos)


def default_probe_grid(config: DeviceConfig, flux: FluxBias) -> np.ndarray:
    """Probe grid around the bias's resonance: at least samples_per_gamma
    points per linewidth, spanning half_span_gammas linewidths each side,
    clipped to the tunable band."""
    omega_a, rates = theory_rates(config, flux)
    f_center = omega_a / TWO_PI
    gamma_hz = max(rates.gamma / TWO_PI, 1.0)
    step = gamma_hz / config.samples_per_gamma
    n_half = int(round(config.half_span_gammas * config.samples_per_gamma))
    grid = f_center + step * np.arange(-n_half, n_half + 1)
    lo, hi = device_band_hz(config)
    grid = grid[(grid >= lo) & (grid <= hi)]
    if grid.size < 16:
        raise GridOutsideBand(
            f"default grid at Phi/Phi0 = {flux.phi_over_phi0:.6g} leaves "
            f"fewer than 16 points inside the band")
    return grid


def synth_line(config: DeviceConfig, flux: FluxBias,
               grid_hz: np.ndarray | None = None,
               noise_sigma: float | None = None,
               seed: int = 0, trace_index: int = 0) -> SpectroscopyTrace:
    """One weak-probe line scan with reproducible noise.

    The noiseless trace is the weak-probe reflection at the bias's
    ground-truth (Gamma_1, gamma, omega_a); identical inputs and seed
    give byte-identical output.
    """
    sigma = config.noise_sigma if noise_sigma is None else noise_sigma
    if sigma < 0.0:
        raise ValueError("noise_sigma must be non-negative")
    omega_a, rates = theory_rates(config, flux)
    if grid_hz is None:
        grid_hz = default_probe_grid(config, flux)
    else:
        grid_hz = np.asarray(grid_hz, dtype=float)
        lo, hi = device_band_hz(config)
        if grid_hz.size == 0 or grid_hz.min() < lo or grid_hz.max() > hi:
            raise GridOutsideBand(
                f"probe grid must lie within [{lo:.6g}, {hi:.6g}] Hz")
    detuning = omega_a - TWO_PI * grid_hz
    rp = reflection_weak(rates, detuning)
    rp = rp + _point_noise(seed, trace_index, grid_hz.size, sigma)
    return SpectroscopyTrace(flux=flux, omega_p_hz=grid_hz, rp=rp,
                             noise_sigma=sigma, seed=seed)


def synth_flux_map(config: DeviceConfig, fluxes: list[FluxBias],
                   probe_grid_hz: np.ndarray | None = None,
                   noise_sigma: float | None = None,
                   seed: int = 0) -> list[SpectroscopyTrace]:
    """Line scans over a list of biases; trace i uses noise keys
    (seed, i, point). A shared probe grid may be passed; by default each
    bias gets its own resonance-centered grid."""
    return [synth_line(config, flux, probe_grid_hz, noise_sigma, seed, i)
            for i, flux in enumerate(fluxes)]


def fluxes_for_band(config: DeviceConfig) -> list[FluxBias]:
    """Map biases: config override if present, else n_flux biases whose
    transition frequencies are uniform over [band_min_hz, band_max_hz]."""
    if config.map_fluxes_phi0 is not None:
        return [FluxBias(phi) for phi in config.map_fluxes_phi0]
    freqs = np.linspace(config.band_min_hz, config.band_max_hz, config.n_flux)
    return [flux_for_frequency(config.transmon(), f, config.transmon_min_abs_cos)
            for f in freqs]


def default_power_grid(config: DeviceConfig, flux: FluxBias) -> np.ndarray:
    """Log-spaced powers spanning power_decades decades bracketing the
    coherent-reflection zero crossing."""
    if config.k_true_hz_per_sqrt_w is None:
        raise MissingTrueCoupling("power grid needs k_true_hz_per_sqrt_w")
    _, rates = theory_rates(config, flux)
    if rates.gamma1 <= rates.gamma:
        raise ValueError("no zero crossing at this bias (Gamma_1 <= gamma); "
                         "pass an explicit power grid")
    p_zero = (rates.gamma1 ** 2 - rates.gamma1 * rates.gamma) \
        / config.k_true_hz_per_sqrt_w ** 2
    half = 0.5 * config.power_decades
    return np.logspace(math.log10(p_zero) - half, math.log10(p_zero) + half,
                       config.n_power)


def synth_power_sweep(config: DeviceConfig, flux: FluxBias,
                      power_w: np.ndarray | None = None,
                      noise_sigma: float | None = None,
                      seed: int = 0, trace_index: int = 0) -> PowerSweep:
    """Resonant-drive power sweep r_p(P) with Omega = k*sqrt(P)."""
    if config.k_true_hz_per_sqrt_w is None:
        raise MissingTrueCoupling("synth_power_sweep needs k_true_hz_per_sqrt_w")
    sigma = config.noise_sigma if noise_sigma is None else noise_sigma
    if sigma < 0.0:
        raise ValueError("noise_sigma must be non-negative")
    _, rates = theory_rates(config, flux)
    if power_w is None:
        power_w = default_power_grid(config, flux)
    else:
        power_w = np.asarray(power_w, dtype=float)
    rabi = config.k_true_hz_per_sqrt_w * np.sqrt(power_w)
    rp = reflection_power(rates, rabi).astype(complex)
    rp = rp + _point_noise(seed, trace_index, power_w.size, sigma)
    return PowerSweep(flux=flux, power_w=power_w, rp=rp,
                      noise_sigma=sigma, seed=seed)


def _gamma1_at_frequency(config: DeviceConfig, f_hz: float) -> float:
    flux = flux_for_frequency(config.transmon(), f_hz, config.transmon_min_abs_cos)
    _, rates = theory_rates(config, flux)
    return rates.gamma1


def node_in_band_hz(config: DeviceConfig) -> float:
    """Frequency of the decoupling node inside the scan band."""
    from .device import node_frequency_hz
    return node_frequency_hz(config.geometry(), config.band_min_hz,
                             config.band_max_hz)


def engineer_ratio_pair(config: DeviceConfig,
                        ratio: float | None = None) -> tuple[FluxBias, FluxBias]:
    """Two biases whose ground-truth decay rates differ by exactly `ratio`.

    The strong bias sits near the low-frequency edge of the scan band;
    the weak one is found between the node and the band top by root
    finding on the active lifetime model.
    """
    ratio = config.ratio_target if ratio is None else ratio
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")
    f_node = node_in_band_hz(config)
    span = config.band_max_hz - config.band_min_hz
    f_hi = config.band_min_hz + 0.05 * span
    g_hi = _gamma1_at_frequency(config, f_hi)
    target = g_hi / ratio

    def mismatch(f_hz):
        return _gamma1_at_frequency(config, f_hz) - target

    f_lo = brentq(mismatch, f_node + 1e3, config.band_max_hz, xtol=1e-3)
    tr = config.transmon()
    return (flux_for_frequency(tr, f_hi, config.transmon_min_abs_cos),
            flux_for_frequency(tr, f_lo, config.transmon_min_abs_cos))


def flux_for_reported_quanta(config: DeviceConfig, s_reported: float) -> FluxBias:
    """Bias at which the standard pipeline's extracted spectral density
    equals `s_reported` quanta.

    The pipeline normalizes with the reconciled coupling k_m, which is
    known a priori from the config (mean of the configured true coupling
    and the circuit value), so the target decay rate is
    Gamma_1 = s_reported * k_m^2 * hbar * omega_a.
    """
    from .estimator import coupling_from_circuit
    if config.k_true_hz_per_sqrt_w is None:
        raise MissingTrueCoupling("flux_for_reported_quanta needs k_true_hz_per_sqrt_w")
    k_s = coupling_from_circuit(config.transmon(), config.geometry(), config.beta)
    k_m = 0.5 * (config.k_true_hz_per_sqrt_w + k_s)
    f_node = node_in_band_hz(config)

    def mismatch(f_hz):
        return _gamma1_at_frequency(config, f_hz) \
            - s_reported * k_m ** 2 * HBAR * TWO_PI * f_hz

    f = brentq(mismatch, f_node + 1e3, config.band_max_hz, xtol=1e-3)
    return flux_for_frequency(config.transmon(), f, config.transmon_min_abs_cos)
