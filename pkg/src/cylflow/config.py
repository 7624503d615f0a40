"""Flat key=value run configuration, unit conversion, constants ledger.

The config format is deliberately flat (one key per line) so experiment
sweeps diff cleanly.  Unknown and duplicate keys are errors.  Empirical
constants estimated by verification runs are kept in a single JSON ledger
and consumed by the theorem-level report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

import numpy as np

__all__ = [
    "RunConfig",
    "EstimatedConstant",
    "parse_config",
    "serialize_config",
    "nondimensionalize",
    "physical_scales",
    "load_constants",
    "update_constant",
    "get_constant",
]


@dataclass
class RunConfig:
    nx: int = 64
    ny: int = 64
    lam: float = 16.0
    t_end: float = 1.0
    dt_acc: float = 1e-3
    safety: float = 0.9
    diag_step: float = 0.05
    diag_times: str = ""  # explicit comma list; overrides diag_step when set
    kind: str = "random_bandlimited"
    seed: int = 0
    target_ru: float = 0.0
    target_romega: float = 1.0
    band: int = 4
    rho: float = 1.0
    center: str = "argmax_e"
    fit_t_lo: float = -1.0  # -1 means the default window
    fit_t_hi: float = -1.0
    envelope_lambda: float = 0.9
    tau: float = 0.1
    nu: float = 0.0  # physical block; 0 means unset
    l_phys: float = 0.0
    rho_density: float = 0.0
    out_dir: str = "out"
    constants_path: str = "constants.json"
    snapshots: bool = True

    def validate(self):
        if self.nx < 8 or self.ny < 8 or self.nx % 2 or self.ny % 2:
            raise ValueError(f"nx, ny must be even and >= 8, got {self.nx}, {self.ny}")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt_acc <= 0:
            raise ValueError("dt_acc must be positive")
        if not (0 < self.safety <= 1):
            raise ValueError("safety must lie in (0, 1]")
        if self.diag_step <= 0:
            raise ValueError("diag_step must be positive")
        if self.target_ru < 0 or self.target_romega < 0:
            raise ValueError("Reynolds targets must be non-negative")
        if self.band < 1:
            raise ValueError("band must be >= 1")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not (0 < self.envelope_lambda < 1):
            raise ValueError("envelope_lambda must lie in (0, 1)")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        for name in ("nu", "l_phys", "rho_density"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be positive when set")
        sched = self.diag_schedule()
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("diagnostic schedule must be strictly increasing")
        return self

    def diag_schedule(self):
        """Diagnostic times: the explicit list, or multiples of diag_step."""
        if self.diag_times.strip():
            return [float(s) for s in self.diag_times.split(",") if s.strip()]
        n = int(round(self.t_end / self.diag_step))
        ts = [i * self.diag_step for i in range(n + 1)]
        if ts[-1] < self.t_end - 1e-12:
            ts.append(self.t_end)
        ts[-1] = self.t_end
        return ts


_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

# config file key -> dataclass field (the file spells the period "lambda")
_KEY_TO_FIELD = {("lambda" if f.name == "lam" else f.name): f.name for f in fields(RunConfig)}


def parse_config(text):
    """Parse a flat key=value document into a validated RunConfig.

    Unknown keys, duplicate keys and malformed values are errors; missing
    keys fall back to documented defaults.
    """
    values = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _KEY_TO_FIELD:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        values[_KEY_TO_FIELD[key]] = val

    kwargs = {}
    for f in fields(RunConfig):
        if f.name not in values:
            continue
        raw = values[f.name]
        if f.type == "bool" or isinstance(f.default, bool):
            low = raw.lower()
            if low not in _BOOL_STRINGS:
                raise ValueError(f"key {f.name!r}: expected a boolean, got {raw!r}")
            kwargs[f.name] = _BOOL_STRINGS[low]
        elif isinstance(f.default, int):
            kwargs[f.name] = int(raw)
        elif isinstance(f.default, float):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw
    return RunConfig(**kwargs).validate()


def serialize_config(cfg):
    """Emit the flat key=value form; parse(serialize(cfg)) equals cfg."""
    lines = []
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = format(v, ".17g")
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def nondimensionalize(u_phys, omega_phys, nu, L):
    """Physical scales to the dimensionless frame.

    Returns (R_u, R_omega, time_scale) with R_u = L u / nu,
    R_omega = L^2 omega / nu and time_scale = L^2 / nu physical seconds per
    dimensionless time unit.
    """
    if nu <= 0 or L <= 0:
        raise ValueError("nu and L must be positive")
    return L * u_phys / nu, L**2 * omega_phys / nu, L**2 / nu


def physical_scales(r_u, r_omega, nu, L):
    """Inverse map: dimensionless Reynolds pair back to physical scales."""
    if nu <= 0 or L <= 0:
        raise ValueError("nu and L must be positive")
    return nu * r_u / L, nu * r_omega / L**2, L**2 / nu


@dataclass
class EstimatedConstant:
    """One empirically estimated constant with its provenance."""

    name: str
    value: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"estimated constant {self.name} is not finite")


def load_constants(path):
    """Read the constants ledger; returns {} when the file does not exist."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        return {}
    return {
        name: EstimatedConstant(name=name, value=entry["value"], provenance=entry.get("provenance", {}))
        for name, entry in raw.items()
    }


def update_constant(path, est):
    """Insert or overwrite one ledger entry (read-modify-write)."""
    entries = load_constants(path)
    entries[est.name] = est
    payload = {
        name: {"value": e.value, "provenance": e.provenance} for name, e in sorted(entries.items())
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def get_constant(path, name):
    """Fetch one constant value; raises KeyError with the ledger path."""
    entries = load_constants(path)
    if name not in entries:
        raise KeyError(f"constant {name!r} not found in ledger {path}")
    return entries[name].value
