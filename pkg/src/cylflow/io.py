"""CSV diagnostics and raw binary snapshots.

Diagnostics rows use a fixed column order and 17 significant digits, so
float64 values round-trip exactly and identical runs produce bitwise
identical files.  Snapshots are raw little-endian float64, row-major with
x1 outermost; spectral snapshots store the complex coefficients as
interleaved (re, im) float64 pairs.  Each snapshot has a plain-text
key=value sidecar at <path>.meta.
"""

from __future__ import annotations

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .solver import FlowState
from .spectral import PHYSICAL, SPECTRAL, ScalarField, SpectralGrid

__all__ = [
    "write_csv_records",
    "read_csv_records",
    "write_field",
    "read_field",
    "write_state",
    "read_state",
]


def _fmt(x):
    return format(float(x), ".17g")


def write_csv_records(records, path):
    """Write diagnostics records in the fixed schema (header always)."""
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_fmt(v) for v in r.csv_values()))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv_records(path):
    """Read a diagnostics CSV; raises on the first mismatched column name."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    header = lines[0].split(",")
    for i, (got, want) in enumerate(zip(header, CSV_COLUMNS)):
        if got != want:
            raise ValueError(f"column {i} is {got!r}, expected {want!r} in {path}")
    if len(header) != len(CSV_COLUMNS):
        raise ValueError(f"expected {len(CSV_COLUMNS)} columns, got {len(header)} in {path}")
    records = []
    for ln in lines[1:]:
        v = [float(s) for s in ln.split(",")]
        records.append(
            DiagnosticsRecord(
                t=v[0],
                sup_u=v[1],
                sup_omega=v[2],
                sup_uhat=v[3],
                ru_t=v[1],
                romega_t=v[2],
                e_rho=v[4],
                d_rho=v[5],
                ens_rho=v[6],
                ensd_rho=v[7],
                ul2_uhat=v[8],
                residual_energy=v[9],
                residual_enstrophy=v[10],
                residual_oscillatory=v[11],
            )
        )
    return records


def _write_sidecar(path, meta):
    with open(path + ".meta", "w", encoding="utf-8", newline="\n") as fh:
        for k, v in meta.items():
            fh.write(f"{k}={_fmt(v) if isinstance(v, float) else v}\n")


def _read_sidecar(path):
    meta = {}
    with open(path + ".meta", "r", encoding="utf-8") as fh:
        for ln in fh.read().splitlines():
            if ln.strip():
                k, _, v = ln.partition("=")
                meta[k.strip()] = v.strip()
    return meta


def write_field(f, path, time=0.0, extra=None):
    """Raw snapshot of one field plus its sidecar."""
    if f.repr == PHYSICAL:
        raw = np.ascontiguousarray(f.data, dtype="<f8")
    else:
        raw = np.ascontiguousarray(f.data, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(raw.tobytes())
    meta = {
        "nx": f.grid.nx,
        "ny": f.grid.ny,
        "lambda": float(f.grid.lam),
        "repr": f.repr,
        "time": float(time),
    }
    if extra:
        meta.update(extra)
    _write_sidecar(path, meta)


def read_field(path):
    """Read a field snapshot; returns (ScalarField, meta dict)."""
    meta = _read_sidecar(path)
    nx, ny = int(meta["nx"]), int(meta["ny"])
    grid = SpectralGrid(nx, ny, float(meta["lambda"]))
    rep = meta["repr"]
    with open(path, "rb") as fh:
        raw = fh.read()
    dtype = "<f8" if rep == PHYSICAL else "<c16"
    data = np.frombuffer(raw, dtype=dtype).reshape(nx, ny).copy()
    return ScalarField(grid, data, rep), meta


def write_state(state, path):
    """Snapshot a FlowState (spectral vorticity plus conserved scalars)."""
    write_field(
        state.omega,
        path,
        time=state.t,
        extra={
            "c": _fmt(state.c),
            "m_mean": _fmt(state.m_mean),
            "m0_norm": _fmt(state.m0_norm),
        },
    )


def read_state(path):
    """Inverse of write_state; bitwise round trip."""
    fld, meta = read_field(path)
    if fld.repr != SPECTRAL:
        raise ValueError(f"state snapshot {path} is not spectral")
    return FlowState(
        grid=fld.grid,
        omega=fld,
        c=float(meta["c"]),
        m_mean=float(meta["m_mean"]),
        t=float(meta["time"]),
        m0_norm=float(meta["m0_norm"]),
    )
