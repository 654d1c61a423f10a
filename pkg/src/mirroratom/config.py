"""JSON device/run configuration with a built-in default profile.

All values in a config file are cyclic (Hz) or SI; conversion to the
internal angular convention happens in the accessor methods.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

from .constants import TWO_PI
from .device import (CouplingParams, LineGeometry, TransmonParams,
                     TRANSMON_MIN_ABS_COS)
from .errors import ConfigError

LIFETIME_MODELS = ("vacuum", "bare")


@dataclass(frozen=True)
class DeviceConfig:
    # Device (required in files).
    ej0_hz: float
    ec_hz: float
    gamma1_bare_hz: float
    gamma_phi_hz: float
    beta: float
    length_m: float
    epsilon: float
    z0_ohm: float
    # Synthesis / analysis knobs (optional in files).
    k_true_hz_per_sqrt_w: float | None = 6.1e15
    lifetime_model: str = "vacuum"
    noise_sigma: float = 0.01
    transmon_min_abs_cos: float = TRANSMON_MIN_ABS_COS
    resolve_depth_factor: float = 5.0
    band_min_hz: float = 4.8e9
    band_max_hz: float = 5.93e9
    n_flux: int = 41
    map_fluxes_phi0: tuple[float, ...] | None = None
    ratio_target: float = 9.8
    samples_per_gamma: float = 8.0
    half_span_gammas: float = 12.0
    power_decades: float = 4.0
    n_power: int = 81

    def __post_init__(self):
        if self.lifetime_model not in LIFETIME_MODELS:
            raise ConfigError(
                f"lifetime_model must be one of {LIFETIME_MODELS}, "
                f"got {self.lifetime_model!r}")
        for name in ("ej0_hz", "ec_hz", "gamma1_bare_hz", "length_m",
                     "epsilon", "z0_ohm"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.gamma_phi_hz < 0:
            raise ConfigError("gamma_phi_hz must be non-negative")
        if not (0.0 < self.beta < 1.0):
            raise ConfigError("beta must lie in (0, 1)")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.band_min_hz >= self.band_max_hz:
            raise ConfigError("band_min_hz must be below band_max_hz")
        if self.samples_per_gamma < 1:
            raise ConfigError("samples_per_gamma must be >= 1")
        if self.n_flux < 1 or self.n_power < 2:
            raise ConfigError("n_flux must be >= 1 and n_power >= 2")

    # Accessors into the physics layer (angular units).

    def transmon(self) -> TransmonParams:
        return TransmonParams(ej0_hz=self.ej0_hz, ec_hz=self.ec_hz)

    def geometry(self) -> LineGeometry:
        return LineGeometry(length_m=self.length_m, epsilon=self.epsilon,
                            z0_ohm=self.z0_ohm)

    def coupling(self) -> CouplingParams:
        return CouplingParams(gamma1_bare=TWO_PI * self.gamma1_bare_hz,
                              gamma_phi=TWO_PI * self.gamma_phi_hz,
                              beta=self.beta)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["map_fluxes_phi0"] is not None:
            d["map_fluxes_phi0"] = list(d["map_fluxes_phi0"])
        return d

    def digest(self) -> str:
        """sha256 over the canonical JSON rendering of the full config."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def replace(self, **overrides) -> "DeviceConfig":
        d = self.to_dict()
        d.update(overrides)
        return config_from_dict(d)


# Measured device parameters plus the library's default run settings.
DEFAULT_PROFILE = {
    "ej0_hz": 13.1e9,
    "ec_hz": 0.38e9,
    "gamma1_bare_hz": 33e6,
    "gamma_phi_hz": 1e6,
    "beta": 0.4,
    "length_m": 0.011,
    "epsilon": 6.25,
    "z0_ohm": 50.0,
}


def default_config(**overrides) -> DeviceConfig:
    return config_from_dict({**DEFAULT_PROFILE, **overrides})


def config_from_dict(data: dict) -> DeviceConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {f.name for f in fields(DeviceConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(k for k in DEFAULT_PROFILE if k not in data)
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    clean = dict(data)
    if clean.get("map_fluxes_phi0") is not None:
        try:
            clean["map_fluxes_phi0"] = tuple(float(x) for x in clean["map_fluxes_phi0"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"map_fluxes_phi0 must be a list of numbers: {exc}")
    for key, value in clean.items():
        if key in ("map_fluxes_phi0", "lifetime_model", "k_true_hz_per_sqrt_w"):
            continue
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config key {key} must be numeric, got {value!r}")
    try:
        return DeviceConfig(**clean)
    except TypeError as exc:
        raise ConfigError(str(exc))


def load_config(path) -> DeviceConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return config_from_dict(data)
