"""Inverse pipeline: line-shape fits, coupling calibration and extraction
of the vacuum spectral density with propagated uncertainties.

Line fits work on the complex reflection (both quadratures), with the
positive rates log-reparameterized so the optimizer stays smooth and
unbounded. Uncertainties come from the residual-scaled inverse normal
matrix at the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .constants import ELEMENTARY_CHARGE, HBAR, TWO_PI
from .device import (FluxBias, LineGeometry, TransmonParams,
                     TRANSMON_MIN_ABS_COS)
from .errors import (FitDiverged, NoZeroCrossing,
                     RequiresGamma1GreaterThanGamma, Unresolvable)
from .synth import PowerSweep, SpectroscopyTrace

DEFAULT_RESOLVE_DEPTH_FACTOR = 5.0
_RATE_FLOOR = 1e-4  # initialization floor, relative to the width estimate


@dataclass(frozen=True)
class LineFit:
    """Extracted line parameters (cyclic Hz) with 1-sigma uncertainties.

    `resolved` is cleared when the fitted response amplitude Gamma_1/gamma
    (the depth of the dip) does not clear the residual noise floor; such
    biases form the region where the atom is hidden. residual_rms is the
    RMS misfit per real data component.
    """

    omega_a_hz: float
    gamma1_hz: float
    gamma_phi_hz: float
    gamma_hz: float
    omega_a_sigma_hz: float
    gamma1_sigma_hz: float
    gamma_phi_sigma_hz: float
    gamma_sigma_hz: float
    resolved: bool
    residual_rms: float

    def __post_init__(self):
        vals = (self.gamma1_hz, self.gamma_phi_hz, self.gamma_hz)
        if all(math.isfinite(v) for v in vals):
            if any(v < 0.0 for v in vals):
                raise ValueError("fitted rates must be non-negative")
            expect = 0.5 * self.gamma1_hz + self.gamma_phi_hz
            if abs(self.gamma_hz - expect) > 1e-9 * max(expect, 1.0):
                raise ValueError("gamma must equal gamma1/2 + gamma_phi")


@dataclass(frozen=True)
class CouplingEstimate:
    """Experimental, circuit-derived and reconciled coupling constants,
    all in Hz/sqrt(W); k_sigma is the systematic half-difference."""

    k_e: float
    k_s: float
    k_m: float
    k_sigma: float


@dataclass(frozen=True)
class SpectralPoint:
    """Vacuum spectral density in quanta at one normalized distance."""

    l_over_lambda: float
    s_quanta: float
    s_sigma: float

    def __post_init__(self):
        if self.s_quanta < 0.0 or self.s_sigma < 0.0:
            raise ValueError("s_quanta and s_sigma must be non-negative")


def _weak_model_and_grad(omega_data, omega_a, gamma1, gamma_phi):
    """Weak-probe model r_p = -1 + Gamma_1/(gamma + i*(omega_a - omega))
    and its derivatives w.r.t. (omega_a, gamma1, gamma_phi)."""
    gamma = 0.5 * gamma1 + gamma_phi
    denom = gamma + 1j * (omega_a - omega_data)
    inv = 1.0 / denom
    model = -1.0 + gamma1 * inv
    d_omega = -1j * gamma1 * inv * inv
    d_g1 = inv - 0.5 * gamma1 * inv * inv
    d_gphi = -gamma1 * inv * inv
    return model, d_omega, d_g1, d_gphi


def _stack(z):
    return np.concatenate([z.real, z.imag])


def _initial_guess(omega, rp):
    """Closed-form start from the Lorentzian geometry of the line.

    omega_a0 at the magnitude minimum, gamma0 from the half-depth width
    of |r_p|^2, Gamma_1,0 = gamma0 * depth clipped into [0, 2*gamma0].
    """
    mag2 = np.abs(rp) ** 2
    i0 = int(np.argmin(mag2))
    omega_a0 = omega[i0]
    depth = max(1.0 - math.sqrt(max(mag2[i0], 0.0)), _RATE_FLOOR)

    half_level = 0.5 * (1.0 + mag2[i0])
    left = right = None
    for i in range(i0, -1, -1):
        if mag2[i] >= half_level:
            left = omega[i]
            break
    for i in range(i0, omega.size):
        if mag2[i] >= half_level:
            right = omega[i]
            break
    span = omega[-1] - omega[0]
    if left is not None and right is not None and right > left:
        gamma0 = 0.5 * (right - left)
    else:
        gamma0 = 0.1 * span
    step = span / (omega.size - 1)
    gamma0 = min(max(gamma0, 2.0 * step), span)

    gamma1_0 = min(max(gamma0 * depth, _RATE_FLOOR * gamma0),
                   2.0 * gamma0 * (1.0 - 1e-9))
    gphi_0 = max(gamma0 - 0.5 * gamma1_0, _RATE_FLOOR * gamma0)
    return omega_a0, gamma0, gamma1_0, gphi_0


def fit_line(trace: SpectroscopyTrace,
             resolve_depth_factor: float = DEFAULT_RESOLVE_DEPTH_FACTOR,
             max_nfev: int = 1000) -> LineFit:
    """Damped least-squares fit of a line scan to the weak-probe model.

    Both quadratures are fit simultaneously over (omega_a, Gamma_1,
    Gamma_phi). Returns a flagged partial result (resolved=False) when
    the dip is buried in the noise rather than raising.

    Raises
    ------
    Unresolvable
        If the trace is unusable (non-finite data / degenerate guess).
    FitDiverged
        If the optimizer exhausts max_nfev.
    """
    if len(trace) < 16:
        raise ValueError("fit_line needs at least 16 points")
    omega = TWO_PI * trace.omega_p_hz
    rp = trace.rp
    if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(rp))):
        raise Unresolvable("trace contains non-finite samples")

    omega_a0, gamma0, gamma1_0, gphi_0 = _initial_guess(omega, rp)
    if not all(map(math.isfinite, (omega_a0, gamma0, gamma1_0, gphi_0))):
        raise Unresolvable("could not form a finite initial guess")

    def unpack(u):
        return (omega_a0 + gamma0 * u[0],
                gamma0 * math.exp(u[1]),
                gamma0 * math.exp(u[2]))

    def residuals(u):
        model, _, _, _ = _weak_model_and_grad(omega, *unpack(u))
        return _stack(model - rp)

    def jacobian(u):
        omega_a, g1, gphi = unpack(u)
        _, d_om, d_g1, d_gphi = _weak_model_and_grad(omega, omega_a, g1, gphi)
        cols = [gamma0 * d_om, g1 * d_g1, gphi * d_gphi]
        return np.column_stack([_stack(c) for c in cols])

    u0 = np.array([0.0, math.log(gamma1_0 / gamma0), math.log(gphi_0 / gamma0)])
    result = least_squares(residuals, u0, jac=jacobian, method="lm",
                           ftol=1e-13, xtol=1e-13, gtol=1e-13,
                           max_nfev=max_nfev)
    if result.status <= 0:
        raise FitDiverged(f"line fit stopped: {result.message}")

    omega_a, gamma1, gamma_phi = unpack(result.x)
    gamma = 0.5 * gamma1 + gamma_phi
    n_res = 2 * len(trace)
    rss = float(np.sum(result.fun ** 2))
    residual_rms = math.sqrt(rss / n_res)

    # Residual-scaled covariance from the physical-parameter Jacobian.
    _, d_om, d_g1, d_gphi = _weak_model_and_grad(omega, omega_a, gamma1, gamma_phi)
    jac_phys = np.column_stack([_stack(d_om), _stack(d_g1), _stack(d_gphi)])
    dof = max(n_res - 3, 1)
    cov = (rss / dof) * np.linalg.pinv(jac_phys.T @ jac_phys)
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    var_gamma = 0.25 * cov[1, 1] + cov[2, 2] + cov[1, 2]
    sigma_gamma = math.sqrt(max(var_gamma, 0.0))

    # Resolved: the dip clears the noise floor AND the fitted linewidth is
    # actually sampled by the grid (a sub-spacing line is an artifact that
    # threads between points; real grids carry >= 8 samples per gamma).
    depth = gamma1 / gamma if gamma > 0.0 else 0.0
    grid_step = float(np.median(np.diff(omega)))
    resolved = (depth > resolve_depth_factor * residual_rms
                and gamma >= grid_step)

    return LineFit(
        omega_a_hz=omega_a / TWO_PI,
        gamma1_hz=gamma1 / TWO_PI,
        gamma_phi_hz=gamma_phi / TWO_PI,
        gamma_hz=gamma / TWO_PI,
        omega_a_sigma_hz=sig[0] / TWO_PI,
        gamma1_sigma_hz=sig[1] / TWO_PI,
        gamma_phi_sigma_hz=sig[2] / TWO_PI,
        gamma_sigma_hz=sigma_gamma / TWO_PI,
        resolved=bool(resolved),
        residual_rms=residual_rms,
    )


_FAILED_FIT = LineFit(*(math.nan,) * 8, resolved=False, residual_rms=math.nan)


def fit_flux_map(traces: list[SpectroscopyTrace],
                 resolve_depth_factor: float = DEFAULT_RESOLVE_DEPTH_FACTOR,
                 ) -> list[tuple[FluxBias, LineFit]]:
    """fit_line over every trace, in input order.

    Per-trace failures never abort the map: the bias is retained with a
    NaN, unresolved entry (these biases form the hidden region).
    """
    out = []
    for trace in traces:
        try:
            fit = fit_line(trace, resolve_depth_factor)
        except (FitDiverged, Unresolvable):
            fit = _FAILED_FIT
        out.append((trace.flux, fit))
    return out


def _solve_k(power, data, gamma1, gamma, k0):
    """One-parameter least-squares solve of the resonant power curve for k."""
    def residuals(u):
        m = -1.0 + gamma1 ** 2 / (gamma1 * gamma + (k0 * math.exp(u[0])) ** 2 * power)
        return np.concatenate([m, np.zeros_like(m)]) - data

    def jacobian(u):
        k = k0 * math.exp(u[0])
        dm_dk = -gamma1 ** 2 * 2.0 * k * power / (gamma1 * gamma + k ** 2 * power) ** 2
        col = np.concatenate([dm_dk, np.zeros_like(dm_dk)])
        return (k * col).reshape(-1, 1)

    result = least_squares(residuals, np.array([0.0]), jac=jacobian,
                           method="lm", ftol=1e-13, xtol=1e-13, gtol=1e-13,
                           max_nfev=500)
    if result.status <= 0:
        raise FitDiverged(f"coupling fit stopped: {result.message}")
    return k0 * math.exp(result.x[0]), float(np.sum(result.fun ** 2))


def calibrate_k_experimental(sweep: PowerSweep, line: LineFit) -> tuple[float, float]:
    """Atom-field coupling from the resonant power sweep.

    One-parameter least-squares fit of r_p(P) = -1 + Gamma_1^2 /
    (Gamma_1*gamma + k^2 P) with (Gamma_1, gamma) held at the values
    extracted independently from `line`. Returns (k, standard error) in
    Hz/sqrt(W). The standard error combines the sweep-statistical part
    with the first-order effect of the held-fixed rate uncertainties
    (their mutual covariance is not available and is neglected).

    Raises
    ------
    RequiresGamma1GreaterThanGamma
        The curve only crosses zero when Gamma_1 > gamma.
    NoZeroCrossing
        The sweep does not bracket the zero of Re r_p.
    """
    if not line.resolved:
        raise ValueError("calibration needs a resolved line fit")
    gamma1 = TWO_PI * line.gamma1_hz
    gamma_phi = TWO_PI * line.gamma_phi_hz
    gamma = TWO_PI * line.gamma_hz
    if gamma1 <= gamma:
        raise RequiresGamma1GreaterThanGamma(
            f"Gamma_1/2pi = {line.gamma1_hz:.4g} Hz does not exceed "
            f"gamma/2pi = {line.gamma_hz:.4g} Hz")
    re = sweep.rp.real
    if not (re.min() < 0.0 < re.max()):
        raise NoZeroCrossing("sweep does not bracket the Re r_p = 0 crossing")

    # Start from the observed crossing: Omega_zero^2 = Gamma_1^2 - Gamma_1*gamma.
    idx = int(np.argmin(np.abs(re)))
    k0 = math.sqrt((gamma1 ** 2 - gamma1 * gamma) / sweep.power_w[idx])

    power = sweep.power_w
    data = _stack(sweep.rp)
    k, rss = _solve_k(power, data, gamma1, gamma, k0)

    dm_dk = -gamma1 ** 2 * 2.0 * k * power / (gamma1 * gamma + k ** 2 * power) ** 2
    jtj = float(np.sum(dm_dk ** 2))
    dof = max(2 * len(sweep) - 1, 1)
    var_stat = rss / dof / jtj if jtj > 0.0 else math.inf

    # Sensitivity of the solved k to the rates, by refitting with bumps.
    var_rates = 0.0
    bump = 1e-4
    sig_g1 = TWO_PI * line.gamma1_sigma_hz
    sig_gphi = TWO_PI * line.gamma_phi_sigma_hz
    if math.isfinite(sig_g1) and sig_g1 > 0.0:
        g1b = gamma1 * (1.0 + bump)
        kb, _ = _solve_k(power, data, g1b, 0.5 * g1b + gamma_phi, k)
        var_rates += ((kb - k) / (gamma1 * bump) * sig_g1) ** 2
    if math.isfinite(sig_gphi) and sig_gphi > 0.0 and gamma_phi > 0.0:
        gpb = gamma_phi * (1.0 + bump)
        kb, _ = _solve_k(power, data, gamma1, 0.5 * gamma1 + gpb, k)
        var_rates += ((kb - k) / (gamma_phi * bump) * sig_gphi) ** 2

    return k, math.sqrt(var_stat + var_rates)


def coupling_from_circuit(transmon: TransmonParams, geometry: LineGeometry,
                          beta: float, flux: FluxBias = FluxBias(0.0),
                          min_abs_cos: float = TRANSMON_MIN_ABS_COS) -> float:
    """Circuit-parameter coupling k = e*beta*sqrt(Z0)*(E_J/2E_C)^(1/4)/hbar
    in Hz/sqrt(W), with E_J taken at the calibration flux."""
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie in (0, 1)")
    abs_cos = abs(math.cos(math.pi * flux.phi_over_phi0))
    if abs_cos < min_abs_cos:
        from .errors import FluxOutOfTransmonRegime
        raise FluxOutOfTransmonRegime(
            f"calibration flux {flux.phi_over_phi0:.6g} outside the validity bound")
    ej_hz = transmon.ej0_hz * abs_cos
    return (ELEMENTARY_CHARGE * beta * math.sqrt(geometry.z0_ohm)
            * (ej_hz / (2.0 * transmon.ec_hz)) ** 0.25 / HBAR)


def reconcile_k(k_e: float, k_s: float) -> CouplingEstimate:
    """Mean of the experimental and circuit couplings, with half their
    absolute difference as the systematic error bar."""
    if k_e <= 0.0 or k_s <= 0.0:
        raise ValueError("both coupling values must be positive")
    return CouplingEstimate(k_e=k_e, k_s=k_s, k_m=0.5 * (k_e + k_s),
                            k_sigma=0.5 * abs(k_s - k_e))


def extract_spectrum(fits: list[tuple[FluxBias, LineFit]],
                     coupling: CouplingEstimate,
                     geometry: LineGeometry) -> list[SpectralPoint]:
    """Vacuum spectral density in quanta from resolved line fits.

    s = Gamma_1 / (k_m^2 * hbar * omega_a) with Gamma_1 angular, at
    normalized distance L/lambda(omega_a). The 1-sigma error combines the
    fit uncertainty of Gamma_1 with the systematic coupling uncertainty:
    s_sigma/s = sqrt((sigma_Gamma1/Gamma_1)^2 + (2*k_sigma/k_m)^2).
    Unresolved biases are skipped.
    """
    if coupling.k_m <= 0.0:
        raise ValueError("k_m must be positive")
    points = []
    for _, fit in fits:
        if not fit.resolved or not math.isfinite(fit.gamma1_hz):
            continue
        omega_a = TWO_PI * fit.omega_a_hz
        gamma1 = TWO_PI * fit.gamma1_hz
        s_quanta = gamma1 / (coupling.k_m ** 2 * HBAR * omega_a)
        rel_fit = (fit.gamma1_sigma_hz / fit.gamma1_hz
                   if fit.gamma1_hz > 0.0 else 0.0)
        rel_k = 2.0 * coupling.k_sigma / coupling.k_m
        s_sigma = s_quanta * math.sqrt(rel_fit ** 2 + rel_k ** 2)
        l_over_lambda = geometry.length_m * fit.omega_a_hz / geometry.velocity
        points.append(SpectralPoint(l_over_lambda=l_over_lambda,
                                    s_quanta=s_quanta, s_sigma=s_sigma))
    return points
