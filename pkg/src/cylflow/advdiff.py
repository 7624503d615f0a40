"""Linear advection-diffusion with a prescribed divergence-free drift.

Verification companion to the nonlinear solver: the same integrating-factor
RK4 scheme evolves d_t omega + u.grad(omega) = lap(omega) for drifts whose
horizontal component has zero vertical average.  Provides the L^p-L^q
smoothing ratios and the Gaussian-envelope fit for approximate fundamental
solutions started from narrow Gaussian bumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .biotsavart import divergence_residual
from .diagnostics import v_volume
from .solver import InstabilityError, ifrk4_step
from .spectral import (
    PHYSICAL,
    ScalarField,
    VelocityField,
    _as_physical_data,
    _as_spectral_data,
    _forward,
    _inverse,
    circular_distance,
    lp_norm,
    vertical_average,
)

__all__ = [
    "DriftSpec",
    "EnvelopeFit",
    "LpLqCheck",
    "advdiff_run",
    "periodized_gaussian",
    "fundamental_solution",
    "check_lp_lq",
    "check_gaussian_envelope",
    "duality_residual",
]

DRIFT_KINDS = ("zero", "steady_shear_u1", "time_periodic_shear", "from_snapshot")


@dataclass
class DriftSpec:
    """Divergence-free drift with <u1> = 0 for every x1 and t.

    amplitude is the sup over time of |u1| (the constant M of the Gaussian
    bound).  time_periodic_shear modulates the steady shear by
    cos(2 pi t / period).  from_snapshot carries an explicit velocity field,
    validated at construction.
    """

    kind: str
    amplitude: float = 0.0
    period: float = 1.0
    u: VelocityField = None

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("drift amplitude must be non-negative")
        if self.kind == "time_periodic_shear" and self.period <= 0:
            raise ValueError("period must be positive")
        if self.kind == "from_snapshot":
            if self.u is None:
                raise ValueError("from_snapshot drift needs a velocity field")
            if divergence_residual(self.u) > 1e-8:
                raise ValueError("snapshot drift is not divergence-free")
            mean_u1 = np.abs(vertical_average(self.u.u1).values).max()
            sup = max(lp_norm(self.u.u1, np.inf), 1e-300)
            if mean_u1 > 1e-8 * sup:
                raise ValueError("snapshot drift has nonzero vertical average of u1")
            object.__setattr__(self, "amplitude", lp_norm(self.u.u1, np.inf))

    def velocity(self, grid, t):
        """Physical (u1, u2) at time t."""
        if self.kind == "zero":
            z = np.zeros((grid.nx, grid.ny))
            return z, z
        if self.kind == "steady_shear_u1":
            u1 = self.amplitude * np.sin(2.0 * np.pi * grid.x2)[None, :] * np.ones((grid.nx, 1))
            return u1, np.zeros((grid.nx, grid.ny))
        if self.kind == "time_periodic_shear":
            mod = math.cos(2.0 * np.pi * t / self.period)
            u1 = self.amplitude * mod * np.sin(2.0 * np.pi * grid.x2)[None, :] * np.ones((grid.nx, 1))
            return u1, np.zeros((grid.nx, grid.ny))
        if self.u.grid != grid:
            raise ValueError("snapshot drift grid does not match the field grid")
        return _as_physical_data(self.u.u1), _as_physical_data(self.u.u2)

    def reversed(self, t_final):
        """Adjoint drift -u(t_final - t), used by the duality check."""
        return _ReversedDrift(self, t_final)

    def sup_speed(self, grid, t):
        u1, u2 = self.velocity(grid, t)
        return float(np.abs(u1).max()), float(np.abs(u2).max())


class _ReversedDrift:
    def __init__(self, base, t_final):
        self.base = base
        self.t_final = t_final

    def velocity(self, grid, t):
        u1, u2 = self.base.velocity(grid, self.t_final - t)
        return -u1, -u2

    def sup_speed(self, grid, t):
        return self.base.sup_speed(grid, self.t_final - t)


@dataclass
class EnvelopeFit:
    """Result of fitting log sup_{x2} Gamma against |x1-y1|^2 / (4t).

    passed is True when the fitted slope is at most -lam/(1+M^2), i.e. the
    profile decays at least as fast as the Gaussian bound with the
    configured lam.
    """

    K2_est: float
    slope: float
    lambda_eff: float
    passed: bool


@dataclass
class LpLqCheck:
    times: np.ndarray
    ratios: np.ndarray
    k1: float


def _drift_tendency(grid, drift):
    def tendency(w_hat, t):
        u1, u2 = drift.velocity(grid, t)
        wx = _inverse(grid, 1j * grid.k1_odd[:, None] * w_hat)
        wy = _inverse(grid, 1j * grid.k2_odd[None, :] * w_hat)
        return -_forward(grid, u1 * wx + u2 * wy) * grid.dealias_mask

    return tendency


def _evolve(grid, w_hat, drift, t0, t1, dt_acc, safety, capture=()):
    """Advance coefficients from t0 to t1, landing exactly on capture times."""
    tendency = _drift_tendency(grid, drift)
    captured = {}
    stops = sorted(set(float(t) for t in capture))
    t = t0
    w = w_hat
    for tc in stops:
        if tc < t0 - 1e-12 or tc > t1 + 1e-12:
            raise ValueError("capture times must lie within the run interval")
        if tc <= t0 + 1e-14:
            captured[tc] = w.copy()
    stops = [tc for tc in stops if tc > t0 + 1e-14]
    while t < t1 - 1e-14:
        stop = stops[0] if stops else t1
        s1, s2 = drift.sup_speed(grid, t)
        dt = dt_acc
        if s1 > 0.0:
            dt = min(dt, safety * grid.dx / s1)
        if s2 > 0.0:
            dt = min(dt, safety * grid.dy / s2)
        landing = t + dt >= stop - 1e-14
        if landing:
            dt = stop - t
        pre = float(np.sqrt((np.abs(w) ** 2).sum()))
        w = ifrk4_step(grid, w, t, dt, tendency)
        post = float(np.sqrt((np.abs(w) ** 2).sum()))
        if not np.isfinite(post) or post > 10.0 * pre + 1e-300:
            raise InstabilityError(f"advection-diffusion norm grew 10x at t={t:.6g}", t=t)
        t = stop if landing else t + dt
        if landing and stops:
            captured[stop] = w.copy()
            stops.pop(0)
    return w, captured


def advdiff_run(omega0, drift, t_end, *, dt_acc=1e-3, safety=0.9):
    """Evolve the passive scalar to t_end; mass is conserved to roundoff."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    g = omega0.grid
    w0 = _as_spectral_data(omega0)
    w, _ = _evolve(g, w0, drift, 0.0, t_end, dt_acc, safety)
    if omega0.repr == PHYSICAL:
        return ScalarField(g, _inverse(g, w), PHYSICAL)
    return ScalarField(g, w, "spectral")


def periodized_gaussian(grid, y, sigma):
    """Unit-mass Gaussian bump centered at y, periodized over the box."""
    y1, y2 = y
    x1 = grid.x1[:, None]
    x2 = grid.x2[None, :]
    out = np.zeros((grid.nx, grid.ny))
    p_range = range(-2, 3) if grid.lam < 8 * sigma + 1 else range(-1, 2)
    q_max = int(np.ceil(4.0 * sigma)) + 1
    for p in p_range:
        for q in range(-q_max, q_max + 1):
            out += np.exp(-(((x1 - y1 + p * grid.lam) ** 2) + (x2 - y2 + q) ** 2) / (2.0 * sigma**2))
    out /= out.sum() * grid.cell_area
    return ScalarField(grid, out)


def fundamental_solution(drift, y, t, sigma0, grid=None, *, dt_acc=1e-3, safety=0.9):
    """Approximate fundamental solution: evolve a width-sigma0 unit-mass
    Gaussian centered at y up to time t.

    sigma0 must be at least twice the largest cell size so the bump is
    resolved on the grid.
    """
    if grid is None:
        raise ValueError("fundamental_solution needs an explicit grid")
    if sigma0 < 2.0 * max(grid.dx, grid.dy):
        raise ValueError(f"sigma0={sigma0} under grid resolution (need >= {2*max(grid.dx, grid.dy)})")
    if t <= 0:
        raise ValueError("t must be positive")
    bump = periodized_gaussian(grid, y, sigma0)
    return advdiff_run(bump, drift, t, dt_acc=dt_acc, safety=safety)


def check_lp_lq(drift, omega0, p, q, times, *, dt_acc=1e-3, safety=0.9):
    """Empirical smoothing constant: max over times of
    ||omega(t)||_q V(t)^(1/p - 1/q) / ||omega0||_p."""
    if not (1 <= p <= q):
        raise ValueError("need 1 <= p <= q")
    g = omega0.grid
    w0 = _as_spectral_data(omega0)
    denom = lp_norm(omega0, p)
    if denom == 0.0:
        raise ValueError("zero initial data")
    times = sorted(float(t) for t in times)
    _, captured = _evolve(g, w0, drift, 0.0, times[-1], dt_acc, safety, capture=times)
    ratios = []
    for t in times:
        fld = ScalarField(g, _inverse(g, captured[t]))
        nq = lp_norm(fld, q)
        pw = 1.0 / p - (0.0 if q == np.inf else 1.0 / q)
        v = v_volume(t) if t > 0 else 1.0
        ratios.append(nq * v**pw / denom if t > 0 else nq / denom)
    ratios = np.asarray(ratios)
    return LpLqCheck(times=np.asarray(times), ratios=ratios, k1=float(ratios.max()))


def check_gaussian_envelope(gamma, y, t, M, lam):
    """Fit the horizontal log-profile of an approximate fundamental solution
    against the Gaussian-bound regressor |x1-y1|^2 / (4t).

    Points below 1e-10 of the profile maximum are excluded; fewer than 8
    usable points is an error.  K2_est is the max over usable points of
    Gamma V(t) exp(+lam |x1-y1|^2 / (4 (1+M^2) t)).
    """
    if not (0.0 < lam < 1.0):
        raise ValueError("lam must lie in (0, 1)")
    g = gamma.grid
    prof = _as_physical_data(gamma).max(axis=1)
    y1 = y[0]
    dist = circular_distance(g.x1, y1, g.lam)
    s = dist**2 / (4.0 * t)
    usable = prof > 1e-10 * prof.max()
    if usable.sum() < 8:
        raise ValueError(f"degenerate envelope fit: only {int(usable.sum())} usable points")
    slope, _ = np.polyfit(s[usable], np.log(prof[usable]), 1)
    slope = float(slope)
    k2 = float(
        (prof[usable] * v_volume(t) * np.exp(lam * s[usable] / (1.0 + M**2))).max()
    )
    lambda_eff = min(max(-slope * (1.0 + M**2), 1e-12), 1.0)
    passed = bool(np.isfinite(k2) and slope <= -lam / (1.0 + M**2))
    return EnvelopeFit(K2_est=k2, slope=slope, lambda_eff=lambda_eff, passed=passed)


def duality_residual(drift, omega0, w0, t_final, *, dt_acc=1e-3, safety=0.9):
    """Relative mismatch of <omega(T), w0> and <omega0, w(T)> where w evolves
    under the adjoint drift -u(T - t)."""
    g = omega0.grid
    a_end = advdiff_run(omega0, drift, t_final, dt_acc=dt_acc, safety=safety)
    b_end_hat, _ = _evolve(
        g, _as_spectral_data(w0), drift.reversed(t_final), 0.0, t_final, dt_acc, safety
    )
    b_end = ScalarField(g, _inverse(g, b_end_hat))
    lhs = float((_as_physical_data(a_end) * _as_physical_data(w0)).sum() * g.cell_area)
    rhs = float((_as_physical_data(omega0) * b_end.data).sum() * g.cell_area)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale
