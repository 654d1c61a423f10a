"""Command-line pipeline: simulate -> fit -> report, plus theory curves.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 check
failure. Data outputs are byte-identical across reruns with the same
config digest and seed; only the manifest timestamp differs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import DeviceConfig, config_from_dict, default_config, load_config
from .constants import TWO_PI
from .dataio import (read_json, read_sweep_csv, read_traces_csv,
                     write_json, write_sweep_csv, write_table_csv,
                     write_traces_csv)
from .device import FluxBias, node_frequency_hz, quanta_vs_distance
from .errors import (ConfigError, DataError, FluxOutOfTransmonRegime,
                     MirrorAtomError)
from .estimator import (LineFit, calibrate_k_experimental, coupling_from_circuit,
                        extract_spectrum, fit_flux_map, fit_line, reconcile_k)
from .scattering import RateSet, reflection_weak
from .synth import (engineer_ratio_pair, fluxes_for_band, synth_flux_map,
                    synth_line, synth_power_sweep, theory_rates)

FLUXMAP_CSV = "fluxmap.csv"
LINE_HI_CSV = "line_hi.csv"
LINE_LO_CSV = "line_lo.csv"
LINE_CAL_CSV = "line_cal.csv"
SWEEP_CSV = "power_sweep.csv"
MANIFEST_JSON = "manifest.json"
FITS_JSON = "fits.json"
COUPLING_JSON = "coupling.json"
SPECTRUM_JSON = "spectrum.json"
REPORT_JSON = "report.json"
THEORY_CSV = "theory.csv"
LANDMARKS_JSON = "landmarks.json"

# Spectrum-vs-theory consistency is judged at this many error bars.
CHECK_SIGMA = 2.0


@dataclass(frozen=True)
class RunManifest:
    """Provenance record; exactly one per output directory."""

    command: str
    config_digest: str
    seed: int | None
    config: dict
    extras: dict

    def to_dict(self) -> dict:
        return {
            "tool": "mirroratom",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "config_digest": self.config_digest,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "config": self.config,
            "extras": self.extras,
        }


def _write_manifest(out_dir: Path, manifest: RunManifest) -> None:
    write_json(out_dir / MANIFEST_JSON, manifest.to_dict())


def _load_run(data_dir: Path) -> tuple[DeviceConfig, dict]:
    path = data_dir / MANIFEST_JSON
    if not path.exists():
        raise DataError(f"no {MANIFEST_JSON} in {data_dir}")
    manifest = read_json(path)
    try:
        config = config_from_dict(manifest["config"])
        extras = manifest["extras"]
    except KeyError as exc:
        raise DataError(f"manifest missing key {exc}")
    return config, extras


def _resolve_config(args) -> DeviceConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = args.seed

    fluxes = fluxes_for_band(config)
    traces = synth_flux_map(config, fluxes, seed=seed)
    n = len(traces)

    flux_hi, flux_lo = engineer_ratio_pair(config)
    line_hi = synth_line(config, flux_hi, seed=seed, trace_index=n)
    line_lo = synth_line(config, flux_lo, seed=seed, trace_index=n + 1)
    flux_cal = FluxBias(0.0)
    line_cal = synth_line(config, flux_cal, seed=seed, trace_index=n + 2)
    sweep = synth_power_sweep(config, flux_cal, seed=seed, trace_index=n + 3)

    write_traces_csv(out_dir / FLUXMAP_CSV, traces)
    write_traces_csv(out_dir / LINE_HI_CSV, [line_hi])
    write_traces_csv(out_dir / LINE_LO_CSV, [line_lo])
    write_traces_csv(out_dir / LINE_CAL_CSV, [line_cal])
    write_sweep_csv(out_dir / SWEEP_CSV, sweep)

    extras = {
        "map_fluxes_phi0": [f.phi_over_phi0 for f in fluxes],
        "line_hi_flux_phi0": flux_hi.phi_over_phi0,
        "line_lo_flux_phi0": flux_lo.phi_over_phi0,
        "cal_flux_phi0": flux_cal.phi_over_phi0,
        "files": {
            "fluxmap": FLUXMAP_CSV,
            "line_hi": LINE_HI_CSV,
            "line_lo": LINE_LO_CSV,
            "line_cal": LINE_CAL_CSV,
            "sweep": SWEEP_CSV,
        },
    }
    _write_manifest(out_dir, RunManifest(
        command="simulate", config_digest=config.digest(), seed=seed,
        config=config.to_dict(), extras=extras))

    # Round-trip schema check on everything just written.
    for name in (FLUXMAP_CSV, LINE_HI_CSV, LINE_LO_CSV, LINE_CAL_CSV):
        read_traces_csv(out_dir / name)
    read_sweep_csv(out_dir / SWEEP_CSV)
    read_json(out_dir / MANIFEST_JSON)
    return 0


def _fit_to_dict(flux: FluxBias, fit: LineFit) -> dict:
    return {
        "flux_phi0": flux.phi_over_phi0,
        "omega_a_hz": fit.omega_a_hz,
        "gamma1_hz": fit.gamma1_hz,
        "gamma_phi_hz": fit.gamma_phi_hz,
        "gamma_hz": fit.gamma_hz,
        "omega_a_sigma_hz": fit.omega_a_sigma_hz,
        "gamma1_sigma_hz": fit.gamma1_sigma_hz,
        "gamma_phi_sigma_hz": fit.gamma_phi_sigma_hz,
        "gamma_sigma_hz": fit.gamma_sigma_hz,
        "resolved": fit.resolved,
        "residual_rms": fit.residual_rms,
    }


def _fig2b_rows(trace, fit: LineFit):
    rates = RateSet(gamma1=TWO_PI * fit.gamma1_hz,
                    gamma_phi=TWO_PI * fit.gamma_phi_hz)
    detuning = TWO_PI * (fit.omega_a_hz - trace.omega_p_hz)
    model = reflection_weak(rates, detuning)
    return zip(trace.omega_p_hz, np.abs(trace.rp), np.abs(model))


def cmd_fit(args) -> int:
    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config, extras = _load_run(data_dir)
    files = extras["files"]
    geometry = config.geometry()

    traces = read_traces_csv(data_dir / files["fluxmap"])
    map_fits = fit_flux_map(traces, config.resolve_depth_factor)
    write_json(out_dir / FITS_JSON, [_fit_to_dict(f, fit) for f, fit in map_fits])

    named_fits = {}
    for name in ("line_hi", "line_lo", "line_cal"):
        trace = read_traces_csv(data_dir / files[name])[0]
        fit = fit_line(trace, config.resolve_depth_factor)
        named_fits[name] = (trace, fit)
        write_table_csv(out_dir / f"fig2b_{name}.csv",
                        ("omega_p_hz", "abs_rp", "abs_rp_fit"),
                        _fig2b_rows(trace, fit))

    cal_trace, cal_fit = named_fits["line_cal"]
    sweep = read_sweep_csv(data_dir / files["sweep"],
                           flux=FluxBias(extras["cal_flux_phi0"]))
    k_e, _ = calibrate_k_experimental(sweep, cal_fit)
    k_s = coupling_from_circuit(config.transmon(), geometry, config.beta,
                                flux=FluxBias(extras["cal_flux_phi0"]),
                                min_abs_cos=config.transmon_min_abs_cos)
    coupling = reconcile_k(k_e, k_s)
    write_json(out_dir / COUPLING_JSON, {
        "k_e": coupling.k_e, "k_s": coupling.k_s,
        "k_m": coupling.k_m, "k_sigma": coupling.k_sigma,
    })

    spectrum = extract_spectrum(map_fits, coupling, geometry)
    write_json(out_dir / SPECTRUM_JSON, [
        {"l_over_lambda": p.l_over_lambda, "s_quanta": p.s_quanta,
         "s_sigma": p.s_sigma} for p in spectrum])

    fig2c_rows = []
    for flux, fit in map_fits:
        if not np.isfinite(fit.gamma1_hz):
            continue
        x = geometry.length_m * fit.omega_a_hz / geometry.velocity
        fig2c_rows.append((x, fit.gamma1_hz, fit.gamma1_sigma_hz,
                           fit.gamma_phi_hz, fit.gamma_phi_sigma_hz,
                           1.0 if fit.resolved else 0.0))
    write_table_csv(out_dir / "fig2c.csv",
                    ("l_over_lambda", "gamma1_hz", "gamma1_sigma_hz",
                     "gamma_phi_hz", "gamma_phi_sigma_hz", "resolved"),
                    fig2c_rows)

    rates = RateSet(gamma1=TWO_PI * cal_fit.gamma1_hz,
                    gamma_phi=TWO_PI * cal_fit.gamma_phi_hz)
    model = -1.0 + rates.gamma1 ** 2 / (rates.gamma1 * rates.gamma
                                        + k_e ** 2 * sweep.power_w)
    write_table_csv(out_dir / "fig3.csv",
                    ("power_w", "re_rp", "im_rp", "re_rp_fit", "im_rp_fit"),
                    zip(sweep.power_w, sweep.rp.real, sweep.rp.imag,
                        model, np.zeros_like(model)))

    write_table_csv(out_dir / "fig4.csv",
                    ("l_over_lambda", "s_quanta", "s_sigma"),
                    ((p.l_over_lambda, p.s_quanta, p.s_sigma) for p in spectrum))

    _write_manifest(out_dir, RunManifest(
        command="fit", config_digest=config.digest(), seed=None,
        config=config.to_dict(),
        extras={"data_dir": str(data_dir), "named_fits": {
            name: _fit_to_dict(trace.flux, fit)
            for name, (trace, fit) in named_fits.items()}}))

    for name in (FITS_JSON, COUPLING_JSON, SPECTRUM_JSON, MANIFEST_JSON):
        read_json(out_dir / name)
    return 0


def cmd_theory(args) -> int:
    config = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not (0.0 < args.l_min < args.l_max):
        raise ConfigError("need 0 < l-min < l-max")

    grid = np.linspace(args.l_min, args.l_max, args.n_points)
    landmarks = np.array([0.5, 0.625, 0.75])
    landmarks = landmarks[(landmarks >= args.l_min) & (landmarks <= args.l_max)]
    grid = np.union1d(grid, landmarks)

    geometry = config.geometry()
    coupling = config.coupling()
    quanta = quanta_vs_distance(grid)
    gamma1_hz = config.gamma1_bare_hz * quanta
    omega_hz = grid * geometry.velocity / geometry.length_m
    write_table_csv(out_dir / THEORY_CSV,
                    ("l_over_lambda", "omega_a_hz", "gamma1_hz", "s_quanta"),
                    zip(grid, omega_hz, gamma1_hz, quanta))

    try:
        node_hz = node_frequency_hz(geometry, config.band_min_hz, config.band_max_hz)
    except ValueError:
        node_hz = None
    write_json(out_dir / LANDMARKS_JSON, {
        "node_frequency_hz": node_hz,
        "landmarks": [{"l_over_lambda": float(x),
                       "s_quanta": float(q),
                       "gamma1_hz": float(g)}
                      for x, q, g in zip(landmarks, quanta_vs_distance(landmarks),
                                         config.gamma1_bare_hz
                                         * quanta_vs_distance(landmarks))],
    })

    _write_manifest(out_dir, RunManifest(
        command="theory", config_digest=config.digest(), seed=None,
        config=config.to_dict(),
        extras={"l_min": args.l_min, "l_max": args.l_max,
                "n_points": args.n_points}))
    read_json(out_dir / LANDMARKS_JSON)
    read_json(out_dir / MANIFEST_JSON)
    return 0


def _spectrum_check(spectrum: list[dict]) -> tuple[bool, float]:
    """Largest |s - s_theory| in units of the point's error bar."""
    worst = 0.0
    for point in spectrum:
        s_th = float(quanta_vs_distance(point["l_over_lambda"]))
        band = CHECK_SIGMA * point["s_sigma"] + 1e-9
        pull = abs(point["s_quanta"] - s_th) / band if band > 0 else np.inf
        worst = max(worst, pull)
    return worst <= 1.0, worst


def cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    config, _ = _load_run(out_dir)
    fits = read_json(out_dir / FITS_JSON)
    coupling = read_json(out_dir / COUPLING_JSON)
    spectrum = read_json(out_dir / SPECTRUM_JSON)

    resolved = [f for f in fits if f["resolved"] and f["gamma1_hz"] is not None]
    g_max = max((f["gamma1_hz"] for f in resolved), default=None)
    g_min = min((f["gamma1_hz"] for f in resolved), default=None)
    ratio = g_max / g_min if resolved and g_min > 0 else None

    s_min_point = min(spectrum, key=lambda p: p["s_quanta"], default=None)
    try:
        node_hz = node_frequency_hz(config.geometry(), config.band_min_hz,
                                    config.band_max_hz)
    except ValueError:
        node_hz = None

    report = {
        "n_biases": len(fits),
        "n_resolved": len(resolved),
        "gamma1_max_hz": g_max,
        "gamma1_min_hz": g_min,
        "gamma1_ratio": ratio,
        "s_quanta_min": s_min_point["s_quanta"] if s_min_point else None,
        "s_quanta_min_sigma": s_min_point["s_sigma"] if s_min_point else None,
        "suppression_vs_open_line": (1.0 / s_min_point["s_quanta"]
                                     if s_min_point and s_min_point["s_quanta"] > 0
                                     else None),
        "node_frequency_hz": node_hz,
        "coupling": coupling,
    }

    status = 0
    if args.check:
        passed, worst = _spectrum_check(spectrum)
        report["check"] = {"passed": passed, "worst_pull": worst,
                           "n_sigma": CHECK_SIGMA}
        if not passed:
            status = 4
    write_json(out_dir / REPORT_JSON, report)

    def fmt(x):
        return "n/a" if x is None else f"{x:.6g}"

    print(f"biases: {report['n_biases']}  resolved: {report['n_resolved']}")
    print(f"gamma1 max [Hz]: {fmt(g_max)}")
    print(f"gamma1 min [Hz]: {fmt(g_min)}")
    print(f"gamma1 max/min ratio: {fmt(ratio)}")
    print(f"min s_quanta: {fmt(report['s_quanta_min'])} "
          f"+/- {fmt(report['s_quanta_min_sigma'])}")
    print(f"suppression vs open line: {fmt(report['suppression_vs_open_line'])}")
    node_text = "n/a" if node_hz is None else format(node_hz, ".17g")
    print(f"node frequency [Hz]: {node_text}")
    print(f"k_e [Hz/sqrt(W)]: {fmt(coupling['k_e'])}")
    print(f"k_s [Hz/sqrt(W)]: {fmt(coupling['k_s'])}")
    print(f"k_m [Hz/sqrt(W)]: {fmt(coupling['k_m'])} "
          f"+/- {fmt(coupling['k_sigma'])}")
    if args.check:
        print(f"check: {'PASS' if status == 0 else 'FAIL'} "
              f"(worst pull {report['check']['worst_pull']:.3g} "
              f"of {CHECK_SIGMA:g} sigma)")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirroratom",
        description="Simulate and analyze reflection spectroscopy of an "
                    "artificial atom in front of a mirror.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate synthetic datasets")
    p_sim.add_argument("--config", help="JSON config (default: built-in profile)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a simulated/measured dataset")
    p_fit.add_argument("data_dir", help="directory produced by simulate")
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.set_defaults(func=cmd_fit)

    p_th = sub.add_parser("theory", help="emit theory curves")
    p_th.add_argument("--config", help="JSON config (default: built-in profile)")
    p_th.add_argument("--out", required=True, help="output directory")
    p_th.add_argument("--l-min", type=float, default=0.4)
    p_th.add_argument("--l-max", type=float, default=0.8)
    p_th.add_argument("--n-points", type=int, default=161)
    p_th.set_defaults(func=cmd_theory)

    p_rep = sub.add_parser("report", help="summarize fit outputs")
    p_rep.add_argument("out_dir", help="directory produced by fit")
    p_rep.add_argument("--check", action="store_true",
                       help="exit 4 if the spectrum deviates from theory "
                            "beyond its error bars")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FluxOutOfTransmonRegime) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (MirrorAtomError, OSError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
