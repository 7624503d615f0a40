"""Empirical verification of the functional inequalities.

Samples band-limited test fields to estimate the constants in the
cylinder Nash inequality (and its psi form), checks the Poincare-Wirtinger
ratio for vertically mean-zero fields, and extracts the flux-bound
constants from simulation trajectories.  The true constants are infima
over all of H^1 and can only be bounded from below by sampling; reports
carry the grid / period / seed provenance for that reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    ScalarField,
    _as_physical_data,
    _forward,
    _inverse,
    circular_distance,
    lp_norm,
    vertical_average,
)

__all__ = [
    "InequalityReport",
    "NashCheck",
    "nash_check",
    "psi_nash_check",
    "poincare_check",
    "kappa_of",
    "flux_bound_constants",
    "sample_test_field",
    "nash_suite",
    "FIELD_FAMILIES",
]

FIELD_FAMILIES = ("broad", "narrow", "vertical", "generic")


@dataclass
class InequalityReport:
    name: str
    samples: int
    max_ratio: float
    quantiles: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)


@dataclass
class NashCheck:
    lhs: float  # ||f||_2
    rhs_branch1: float  # ||grad f||^(1/3) ||f||_1^(2/3)
    rhs_branch2: float  # ||grad f||^(1/2) ||f||_1^(1/2)
    ratio: float  # lhs / max(branches)


def _grad_l2(f):
    g = f.grid
    spec = f.data if f.repr == "spectral" else _forward(g, f.data)
    fx = _inverse(g, 1j * g.k1_odd[:, None] * spec)
    fy = _inverse(g, 1j * g.k2_odd[None, :] * spec)
    return float(np.sqrt(((fx**2 + fy**2)).sum() * g.cell_area))


def nash_check(f):
    """Both branches of the cylinder Nash inequality for one sample field."""
    l1 = lp_norm(f, 1)
    l2 = lp_norm(f, 2)
    if l2 == 0.0:
        raise ValueError("nash_check requires a nonzero field")
    gl2 = _grad_l2(f)
    b1 = gl2 ** (1.0 / 3.0) * l1 ** (2.0 / 3.0)
    b2 = math.sqrt(gl2) * math.sqrt(l1)
    return NashCheck(lhs=l2, rhs_branch1=b1, rhs_branch2=b2, ratio=l2 / max(b1, b2))


def psi_nash_check(f):
    """Admissible constant of the psi form: the largest C with
    ||grad f||_2 >= C ||f||_2 min(||f||_2/||f||_1, (||f||_2/||f||_1)^2)."""
    l1 = lp_norm(f, 1)
    l2 = lp_norm(f, 2)
    if l2 == 0.0:
        raise ValueError("psi_nash_check requires a nonzero field")
    gl2 = _grad_l2(f)
    x = l2 / l1
    return gl2 / (l2 * min(x, x * x))


def poincare_check(f, tol=1e-10):
    """Poincare-Wirtinger ratio int f^2 / ((1/4pi^2) int |d2 f|^2).

    Requires zero vertical average for every x1; at most 1 for band-limited
    fields, with equality exactly on the span of the |n| = 1 modes.
    """
    g = f.grid
    phys = _as_physical_data(f)
    sup = np.abs(phys).max()
    if sup == 0.0:
        raise ValueError("poincare_check requires a nonzero field")
    if np.abs(phys.mean(axis=1)).max() > tol * sup:
        raise ValueError("poincare_check requires zero vertical average per x1")
    spec = _forward(g, phys)
    num = float((phys**2).sum() * g.cell_area)
    fy = _inverse(g, 1j * g.k2_odd[None, :] * spec)
    den = float((fy**2).sum() * g.cell_area) / (4.0 * np.pi**2)
    return num / den


def kappa_of(omega0):
    """Laminar-regime parameter: sup |omega0| / (4 pi^2)."""
    return lp_norm(omega0, np.inf) / (4.0 * np.pi**2)


def _quantiles(vals):
    if len(vals) == 0:
        return {}
    arr = np.asarray(vals)
    return {q: float(np.quantile(arr, q)) for q in (0.5, 0.9, 0.99)}


def flux_bound_constants(traj, threshold=1e-14):
    """Empirical flux constants from pointwise (x1, t) profile ratios.

    Returns reports keyed "C3" (|f|^2 / ((1+M)^2 e d)), "C4"
    (|phi|^2 / ((1+M)^2 eps delta)), "C8" (|f_hat|^2 / (kappa_t^2 d_hat))
    and "g_ratio" (|g_hat| / (kappa_t d_hat), bounded by 1).  Points where
    the guarded denominator falls below the threshold are skipped and
    counted.
    """
    if not traj.snapshots:
        raise ValueError("empty trajectory")
    M = traj.snapshots[0].state.m0_norm
    g = traj.snapshots[0].state.grid
    vals = {"C3": [], "C4": [], "C8": [], "g_ratio": []}
    skipped = {k: 0 for k in vals}
    for s in traj.snapshots:
        pr = s.fine
        kappa_t = s.sup_omega / (4.0 * np.pi**2)
        den_e = (1.0 + M) ** 2 * pr["e"] * pr["d"]
        keep = den_e > threshold
        skipped["C3"] += int((~keep).sum())
        vals["C3"].extend((pr["f"][keep] ** 2 / den_e[keep]).tolist())
        den_ens = (1.0 + M) ** 2 * pr["eps"] * pr["delta"]
        keep = den_ens > threshold
        skipped["C4"] += int((~keep).sum())
        vals["C4"].extend((pr["phi"][keep] ** 2 / den_ens[keep]).tolist())
        if kappa_t > 0.0:
            den_hat = kappa_t**2 * pr["d_hat"]
            keep = pr["d_hat"] > threshold
            skipped["C8"] += int((~keep).sum())
            vals["C8"].extend((pr["f_hat"][keep] ** 2 / den_hat[keep]).tolist())
            keep = pr["d_hat"] > threshold
            vals["g_ratio"].extend(
                (np.abs(pr["g_hat"][keep]) / (kappa_t * pr["d_hat"][keep])).tolist()
            )
    cfg = {"nx": g.nx, "ny": g.ny, "lambda": g.lam, "M": M}
    out = {}
    for name, v in vals.items():
        out[name] = InequalityReport(
            name=name,
            samples=len(v),
            max_ratio=float(max(v)) if v else 0.0,
            quantiles=_quantiles(v),
            config=dict(cfg, skipped=skipped[name]),
        )
    return out


def _periodized_bump_profile(x, center, width, period):
    d = circular_distance(x, center, period)
    out = np.exp(-(d**2) / (2.0 * width**2))
    # one pair of images is enough once width << period
    for p in (-period, period):
        out += np.exp(-((d + p) ** 2) / (2.0 * width**2))
    return out


def sample_test_field(grid, rng, family):
    """One random test field from the named family.

    broad: wide horizontal bumps (gradient-poor, exercises the n = 1
    branch); narrow: localized 2d bumps (gradient-rich, n = 2 branch);
    vertical: pure vertical Fourier modes; generic: band-limited noise.
    All samples have zero box mean so both sides of the inequality are
    finite and nonzero.
    """
    x1 = grid.x1[:, None]
    x2 = grid.x2[None, :]
    if family == "broad":
        w = rng.uniform(1.5, grid.lam / 4.0)
        c = rng.uniform(0.0, grid.lam)
        vals = _periodized_bump_profile(x1, c, w, grid.lam) * np.ones_like(x2)
    elif family == "narrow":
        w = rng.uniform(0.05, 0.25)
        c1 = rng.uniform(0.0, grid.lam)
        c2 = rng.uniform(0.0, 1.0)
        d1 = circular_distance(x1, c1, grid.lam)
        d2 = circular_distance(x2, c2, 1.0)
        vals = np.exp(-(d1**2 + d2**2) / (2.0 * w**2))
    elif family == "vertical":
        vals = np.zeros((grid.nx, grid.ny))
        for n in range(1, 4):
            vals += rng.normal() * np.cos(2.0 * np.pi * n * x2 + rng.uniform(0, 2 * np.pi)) * np.ones_like(x1)
    elif family == "generic":
        band = max(2, min(grid.nx, grid.ny) // 6)
        spec = _forward(grid, rng.standard_normal((grid.nx, grid.ny)))
        keep = (np.abs(grid.j1)[:, None] <= band) & (np.abs(grid.j2)[None, :] <= band)
        vals = _inverse(grid, spec * keep)
    else:
        raise ValueError(f"unknown field family {family!r}")
    vals = vals - vals.mean()
    scale = rng.uniform(0.5, 2.0)
    return ScalarField(grid, scale * vals)


def nash_suite(grid, n_samples, seed, weights=None):
    """Sample the Nash / psi-Nash ratios over the family mixture.

    Returns (per-sample list, report) where each entry is a dict with the
    family, both branch values, the Nash ratio and the psi-admissible C.
    """
    rng = np.random.default_rng(seed)
    if weights is None:
        weights = {f: 1.0 for f in FIELD_FAMILIES}
    fams = list(weights)
    p = np.asarray([weights[f] for f in fams], dtype=np.float64)
    p = p / p.sum()
    rows = []
    for _ in range(n_samples):
        fam = fams[rng.choice(len(fams), p=p)]
        f = sample_test_field(grid, rng, fam)
        chk = nash_check(f)
        rows.append(
            {
                "family": fam,
                "lhs": chk.lhs,
                "rhs_branch1": chk.rhs_branch1,
                "rhs_branch2": chk.rhs_branch2,
                "ratio": chk.ratio,
                "psi_c": psi_nash_check(f),
            }
        )
    ratios = [r["ratio"] for r in rows]
    report = InequalityReport(
        name="nash",
        samples=len(rows),
        max_ratio=float(max(ratios)),
        quantiles=_quantiles(ratios),
        config={"nx": grid.nx, "ny": grid.ny, "lambda": grid.lam, "seed": seed},
    )
    return rows, report
