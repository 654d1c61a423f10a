"""CSV and JSON serialization.

Every numeric value is written with 17 significant digits so doubles
round-trip bit-faithfully through text; CSV files are UTF-8 with '.'
decimals, a mandatory header, LF line endings and deterministic row
order. Readers validate the schema and report offending row numbers.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .device import FluxBias
from .errors import DataError, SchemaError
from .synth import PowerSweep, SpectroscopyTrace

TRACE_COLUMNS = ("flux_phi0", "omega_p_hz", "re_rp", "im_rp")
SWEEP_COLUMNS = ("power_w", "re_rp", "im_rp")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_float(text: str, column: str, row: int) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise SchemaError(f"column {column} is not a number: {text!r}", row=row)


def write_traces_csv(path, traces: list[SpectroscopyTrace]) -> None:
    """One or more line scans, concatenated in input order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for trace in traces:
            phi = _fmt(trace.flux.phi_over_phi0)
            for f_hz, rp in zip(trace.omega_p_hz, trace.rp):
                writer.writerow((phi, _fmt(f_hz), _fmt(rp.real), _fmt(rp.imag)))


def read_traces_csv(path) -> list[SpectroscopyTrace]:
    """Read traces back, splitting on changes of the flux column.

    Noise level and seed are generator metadata and are not carried by
    the CSV schema; reconstructed traces report them as zero.
    """
    rows = _read_rows(path, TRACE_COLUMNS)
    traces = []
    current_phi = None
    freqs: list[float] = []
    rps: list[complex] = []

    def flush(row):
        if not freqs:
            return
        try:
            traces.append(SpectroscopyTrace(
                flux=FluxBias(current_phi),
                omega_p_hz=np.array(freqs), rp=np.array(rps)))
        except ValueError as exc:
            raise SchemaError(str(exc), row=row)
        freqs.clear()
        rps.clear()

    for row, record in rows:
        phi = _parse_float(record["flux_phi0"], "flux_phi0", row)
        if current_phi is None or phi != current_phi:
            flush(row)
            current_phi = phi
        freqs.append(_parse_float(record["omega_p_hz"], "omega_p_hz", row))
        rps.append(complex(_parse_float(record["re_rp"], "re_rp", row),
                           _parse_float(record["im_rp"], "im_rp", row)))
    flush(row=None)
    if not traces:
        raise SchemaError("file holds no data rows", row=1)
    return traces


def write_sweep_csv(path, sweep: PowerSweep) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for p_w, rp in zip(sweep.power_w, sweep.rp):
            writer.writerow((_fmt(p_w), _fmt(rp.real), _fmt(rp.imag)))


def read_sweep_csv(path, flux: FluxBias = FluxBias(0.0)) -> PowerSweep:
    """Read a power sweep; the bias is not part of the schema and must be
    supplied by the caller (the run manifest records it)."""
    rows = _read_rows(path, SWEEP_COLUMNS)
    powers, rps = [], []
    for row, record in rows:
        powers.append(_parse_float(record["power_w"], "power_w", row))
        rps.append(complex(_parse_float(record["re_rp"], "re_rp", row),
                           _parse_float(record["im_rp"], "im_rp", row)))
    if not powers:
        raise SchemaError("file holds no data rows", row=1)
    try:
        return PowerSweep(flux=flux, power_w=np.array(powers), rp=np.array(rps))
    except ValueError as exc:
        raise SchemaError(str(exc), row=None)


def _read_rows(path, columns):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError("missing header row", row=1)
            if tuple(header) != tuple(columns):
                raise SchemaError(
                    f"header {header!r} does not match {list(columns)!r}", row=1)
            out = []
            for row_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(columns):
                    raise SchemaError(
                        f"expected {len(columns)} fields, got {len(row)}",
                        row=row_no)
                out.append((row_no, dict(zip(columns, row))))
            return out
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")


def _sanitize(obj):
    """json-safe copy; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(_sanitize(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}")


def write_table_csv(path, columns: tuple[str, ...], rows) -> None:
    """Generic numeric table (plot-ready outputs)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
