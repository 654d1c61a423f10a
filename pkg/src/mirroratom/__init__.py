"""Simulator and fitting toolkit for microwave reflection spectroscopy of
a flux-tunable artificial atom terminating-line ("mirror") geometry."""

__version__ = "0.1.0"

from .config import DeviceConfig, default_config, load_config
from .device import (CouplingParams, FluxBias, LineGeometry, TransmonParams,
                     flux_for_frequency, gamma1_theory, gamma1_vacuum,
                     node_frequency_hz, phase_at_frequency, quanta_vs_distance,
                     roundtrip_phase, spectral_density_theory,
                     transition_frequency, wavelength)
from .estimator import (CouplingEstimate, LineFit, SpectralPoint,
                        calibrate_k_experimental, coupling_from_circuit,
                        extract_spectrum, fit_flux_map, fit_line, reconcile_k)
from .scattering import (AtomState, BlochTrajectory, DriveSettings, RateSet,
                         bloch_steady_state, integrate_bloch, reflection_full,
                         reflection_power, reflection_weak,
                         steady_state_by_integration)
from .synth import (PowerSweep, SpectroscopyTrace, engineer_ratio_pair,
                    flux_for_reported_quanta, fluxes_for_band, synth_flux_map,
                    synth_line, synth_power_sweep, theory_rates)

__all__ = [
    "__version__",
    "AtomState", "BlochTrajectory", "CouplingEstimate", "CouplingParams",
    "DeviceConfig", "DriveSettings", "FluxBias", "LineFit", "LineGeometry",
    "PowerSweep", "RateSet", "SpectralPoint", "SpectroscopyTrace",
    "TransmonParams",
    "bloch_steady_state", "calibrate_k_experimental", "coupling_from_circuit",
    "default_config", "engineer_ratio_pair", "extract_spectrum",
    "fit_flux_map", "fit_line", "flux_for_frequency",
    "flux_for_reported_quanta", "fluxes_for_band", "gamma1_theory",
    "gamma1_vacuum", "integrate_bloch", "load_config", "node_frequency_hz",
    "phase_at_frequency", "quanta_vs_distance", "reconcile_k",
    "reflection_full", "reflection_power", "reflection_weak",
    "roundtrip_phase", "spectral_density_theory",
    "steady_state_by_integration", "synth_flux_map", "synth_line",
    "synth_power_sweep", "theory_rates", "transition_frequency", "wavelength",
]
