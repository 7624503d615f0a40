"""Energy, enstrophy and oscillatory-energy diagnostics along trajectories.

All profile quantities are vertical averages of pointwise products of
band-limited fields.  They are evaluated on a 2x zero-padded grid, which
makes the quadratic and cubic vertical means and the x1-derivatives of
profiles exact for dealiased states; the public profile bundles subsample
the padded grid back onto the state's grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .biotsavart import pressure_from_state
from .solver import FlowState, reconstruct_velocity
from .spectral import (
    Profile,
    ScalarField,
    VelocityField,
    _as_physical_data,
    _as_spectral_data,
    circular_distance,
)

__all__ = [
    "EnergyProfiles",
    "EnstrophyProfiles",
    "OscillatoryProfiles",
    "DiagnosticsRecord",
    "RateFit",
    "DiagnosticsOptions",
    "TrajectoryCollector",
    "Trajectory",
    "TheoremCheckConfig",
    "CSV_COLUMNS",
    "v_volume",
    "sup_norms_and_reynolds",
    "energy_profiles",
    "enstrophy_profiles",
    "oscillatory_profiles",
    "localized_sum",
    "localized_sums",
    "balance_residuals",
    "ul2_norm",
    "fit_decay_rate",
    "theorem_checks",
]

CSV_COLUMNS = [
    "t",
    "sup_u",
    "sup_omega",
    "sup_uhat",
    "E_rho",
    "D_rho",
    "Ens_rho",
    "EnsD_rho",
    "ul2_uhat",
    "residual_energy",
    "residual_enstrophy",
    "residual_oscillatory",
]


def v_volume(t):
    """min(t, sqrt(t)): the volume of a ball of radius sqrt(t) on the cylinder."""
    if t <= 0:
        raise ValueError("v_volume requires t > 0")
    return min(t, math.sqrt(t))


@dataclass
class EnergyProfiles:
    e: Profile
    h: Profile
    d: Profile
    f: Profile  # f = d1 e - h


@dataclass
class EnstrophyProfiles:
    eps: Profile
    zeta: Profile
    delta: Profile
    phi: Profile  # phi = d1 eps - zeta


@dataclass
class OscillatoryProfiles:
    e_hat: Profile
    h_hat: Profile
    d_hat: Profile
    f_hat: Profile  # f_hat = d1 e_hat - h_hat
    g_hat: Profile  # g_hat = (d1 m) <u_hat_1 u_hat_2>


@dataclass
class DiagnosticsRecord:
    t: float
    sup_u: float
    sup_omega: float
    sup_uhat: float
    ru_t: float
    romega_t: float
    e_rho: float
    d_rho: float
    ens_rho: float
    ensd_rho: float
    ul2_uhat: float
    residual_energy: float = 0.0
    residual_enstrophy: float = 0.0
    residual_oscillatory: float = 0.0

    def csv_values(self):
        return [
            self.t,
            self.sup_u,
            self.sup_omega,
            self.sup_uhat,
            self.e_rho,
            self.d_rho,
            self.ens_rho,
            self.ensd_rho,
            self.ul2_uhat,
            self.residual_energy,
            self.residual_enstrophy,
            self.residual_oscillatory,
        ]


@dataclass
class RateFit:
    model: str  # "power" or "exponential"
    exponent_or_rate: float
    window: tuple
    rms_log_residual: float


@dataclass
class DiagnosticsOptions:
    """Localization weight and window policy for per-time records."""

    rho: float = 1.0
    center: object = "argmax_e"  # initial energy-density argmax, or an explicit x1


class _FineFields:
    """All profile ingredients of one state, sampled on the 2x padded grid."""

    def __init__(self, state):
        g = state.grid
        self.grid = g
        self.nxf = 2 * g.nx
        self.dxf = g.lam / self.nxf
        self.x1f = self.dxf * np.arange(self.nxf)
        w_hat = _as_spectral_data(state.omega)
        psi = -w_hat * g.inv_ksq
        u1h = -1j * g.k2_odd[None, :] * psi
        u2h = 1j * g.k1_odd[:, None] * psi
        u1h[0, 0] = state.c
        u2h[0, 0] = state.m_mean
        uh1 = u1h.copy()
        uh1[:, 0] = 0.0
        uh2 = u2h.copy()
        uh2[:, 0] = 0.0
        m_hat = u2h[:, 0].copy()

        k1 = g.k1_odd[:, None]
        k2 = g.k2_odd[None, :]
        pad = lambda s: _pad_physical(g, s)
        self.u1 = pad(u1h)
        self.u2 = pad(u2h)
        self.uh1 = pad(uh1)
        self.uh2 = pad(uh2)
        self.w = pad(w_hat)
        self.d1u1 = pad(1j * k1 * u1h)
        self.d2u1 = pad(1j * k2 * u1h)
        self.d1u2 = pad(1j * k1 * u2h)
        self.d2u2 = pad(1j * k2 * u2h)
        self.d1w = pad(1j * k1 * w_hat)
        self.d2w = pad(1j * k2 * w_hat)
        d1m = np.fft.ifft(_pad_profile(g, 1j * g.k1_odd * m_hat) * self.nxf).real
        self.d1m = d1m

        u_phys = VelocityField(
            ScalarField(g, np.fft.ifft2(u1h * (g.nx * g.ny)).real),
            ScalarField(g, np.fft.ifft2(u2h * (g.nx * g.ny)).real),
        )
        w_phys = ScalarField(g, np.fft.ifft2(w_hat * (g.nx * g.ny)).real)
        self.u_phys = u_phys
        self.w_phys = w_phys
        p = pressure_from_state(u_phys, w_phys)
        self.p = pad(_as_spectral_data(p))
        self.M = state.m0_norm

    def profiles(self):
        """Exact fine-grid profiles as a dict of length-2nx arrays."""
        u1, u2, uh1, uh2, w, p = self.u1, self.u2, self.uh1, self.uh2, self.w, self.p
        M = self.M
        e = 0.5 * (u1**2 + u2**2).mean(axis=1) + 0.5 * M**2
        d1e = (u1 * self.d1u1 + u2 * self.d1u2).mean(axis=1)
        d = (self.d1u1**2 + self.d2u1**2 + self.d1u2**2 + self.d2u2**2).mean(axis=1)
        h = ((p + 0.5 * (u1**2 + u2**2)) * u1).mean(axis=1)
        f = d1e - h
        eps = 0.5 * (w**2).mean(axis=1)
        d1eps = (w * self.d1w).mean(axis=1)
        zeta = 0.5 * (w**2 * u1).mean(axis=1)
        delta = (self.d1w**2 + self.d2w**2).mean(axis=1)
        phi = d1eps - zeta
        # the mean part of u1 is the constant c and of u2 is m(x1), so the
        # oscillatory derivatives reuse the full ones minus the m' profile
        d1uh2 = self.d1u2 - self.d1m[:, None]
        e_hat = 0.5 * (uh1**2 + uh2**2).mean(axis=1)
        d1e_hat = (uh1 * self.d1u1 + uh2 * d1uh2).mean(axis=1)
        d_hat = (self.d1u1**2 + self.d2u1**2 + d1uh2**2 + self.d2u2**2).mean(axis=1)
        h_hat = ((p + 0.5 * (uh1**2 + uh2**2)) * uh1).mean(axis=1)
        f_hat = d1e_hat - h_hat
        q12 = (uh1 * uh2).mean(axis=1)
        g_hat = self.d1m * q12
        forcing = _fine_profile_derivative(self.grid, q12)
        return {
            "e": e,
            "h": h,
            "d": d,
            "f": f,
            "eps": eps,
            "zeta": zeta,
            "delta": delta,
            "phi": phi,
            "e_hat": e_hat,
            "h_hat": h_hat,
            "d_hat": d_hat,
            "f_hat": f_hat,
            "g_hat": g_hat,
            "q12": q12,
            "forcing": forcing,
            "d1e": d1e,
            "d1eps": d1eps,
            "d1e_hat": d1e_hat,
        }


def _pad_physical(grid, spec):
    """Zero-pad normalized coefficients to the 2x grid and sample."""
    nx, ny = grid.nx, grid.ny
    big = np.zeros((2 * nx, 2 * ny), dtype=np.complex128)
    big[: nx // 2, : ny // 2] = spec[: nx // 2, : ny // 2]
    big[: nx // 2, 3 * ny // 2 :] = spec[: nx // 2, ny // 2 :]
    big[3 * nx // 2 :, : ny // 2] = spec[nx // 2 :, : ny // 2]
    big[3 * nx // 2 :, 3 * ny // 2 :] = spec[nx // 2 :, ny // 2 :]
    return np.fft.ifft2(big * (4 * nx * ny)).real


def _pad_profile(grid, spec1d):
    nx = grid.nx
    big = np.zeros(2 * nx, dtype=np.complex128)
    big[: nx // 2] = spec1d[: nx // 2]
    big[3 * nx // 2 :] = spec1d[nx // 2 :]
    return big


def _fine_profile_derivative(grid, values):
    nxf = values.shape[0]
    k = 2.0 * np.pi * np.fft.fftfreq(nxf, d=grid.lam / nxf)
    k[nxf // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values)).real


def _coarse(values):
    return values[::2].copy()


def _coarse_sups(ff):
    """Sup norms on the state's own grid (fine samples subsample exactly)."""
    u1 = ff.u1[::2, ::2]
    u2 = ff.u2[::2, ::2]
    sup_u = float(np.sqrt(u1**2 + u2**2).max())
    sup_w = float(np.abs(ff.w[::2, ::2]).max())
    sup_uhat = float(np.sqrt(ff.uh1[::2, ::2] ** 2 + ff.uh2[::2, ::2] ** 2).max())
    return sup_u, sup_w, sup_uhat


def sup_norms_and_reynolds(state):
    """Grid-max norms of |u|, |omega|, |u_hat| and the running Reynolds pair.

    In the dimensionless frame the Reynolds numbers equal the sup norms.
    """
    sup_u, sup_w, sup_uhat = _coarse_sups(_FineFields(state))
    return sup_u, sup_w, sup_uhat, sup_u, sup_w


def energy_profiles(state):
    ff = _FineFields(state)
    pr = ff.profiles()
    g = state.grid
    return EnergyProfiles(
        e=Profile(g, _coarse(pr["e"])),
        h=Profile(g, _coarse(pr["h"])),
        d=Profile(g, _coarse(pr["d"])),
        f=Profile(g, _coarse(pr["f"])),
    )


def enstrophy_profiles(state):
    ff = _FineFields(state)
    pr = ff.profiles()
    g = state.grid
    return EnstrophyProfiles(
        eps=Profile(g, _coarse(pr["eps"])),
        zeta=Profile(g, _coarse(pr["zeta"])),
        delta=Profile(g, _coarse(pr["delta"])),
        phi=Profile(g, _coarse(pr["phi"])),
    )


def oscillatory_profiles(state):
    ff = _FineFields(state)
    pr = ff.profiles()
    g = state.grid
    return OscillatoryProfiles(
        e_hat=Profile(g, _coarse(pr["e_hat"])),
        h_hat=Profile(g, _coarse(pr["h_hat"])),
        d_hat=Profile(g, _coarse(pr["d_hat"])),
        f_hat=Profile(g, _coarse(pr["f_hat"])),
        g_hat=Profile(g, _coarse(pr["g_hat"])),
    )


def _chi(x1, a, rho, lam):
    return np.exp(-rho * circular_distance(x1, a, lam))


def localized_sum(profile, rho, a):
    """Weighted integral of a profile against exp(-rho dist(x1, a))."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    g = profile.grid
    w = _chi(g.x1, a, rho, g.lam)
    return float((w * profile.values).sum() * g.dx)


def localized_sums(profiles, rho, a):
    """Weighted integrals of several profiles with a shared weight."""
    return [localized_sum(p, rho, a) for p in profiles]


def _localized_sum_fine(grid, values, rho, a):
    nxf = values.shape[0]
    dxf = grid.lam / nxf
    x1f = dxf * np.arange(nxf)
    return float((_chi(x1f, a, rho, grid.lam) * values).sum() * dxf)


def balance_residuals(states):
    """L2-in-x1 residuals of the three local dissipation laws.

    Takes >= 3 equally spaced consecutive snapshots and evaluates the
    centered time difference at the central one, against the exact spatial
    terms.  Returns (residual_energy, residual_enstrophy,
    residual_oscillatory).
    """
    if len(states) < 3:
        raise ValueError("balance_residuals needs at least 3 snapshots")
    ts = np.array([s.t for s in states])
    hs = np.diff(ts)
    if np.abs(hs - hs[0]).max() > 1e-9 * max(hs[0], 1e-300):
        raise ValueError("snapshots are not equally spaced")
    mid = len(states) // 2
    prs = [_FineFields(s).profiles() for s in (states[mid - 1], states[mid], states[mid + 1])]
    return _residual_triple(states[mid].grid, prs[0], prs[1], prs[2], hs[0])


def _residual_triple(grid, pr_lo, pr_mid, pr_hi, h):
    dxf = grid.lam / pr_mid["e"].shape[0]

    def l2(v):
        return float(np.sqrt((v**2).sum() * dxf))

    dt_e = (pr_hi["e"] - pr_lo["e"]) / (2.0 * h)
    dt_eps = (pr_hi["eps"] - pr_lo["eps"]) / (2.0 * h)
    dt_ehat = (pr_hi["e_hat"] - pr_lo["e_hat"]) / (2.0 * h)
    r_e = l2(dt_e - _fine_profile_derivative(grid, pr_mid["f"]) + pr_mid["d"])
    r_eps = l2(dt_eps - _fine_profile_derivative(grid, pr_mid["phi"]) + pr_mid["delta"])
    r_osc = l2(
        dt_ehat
        - _fine_profile_derivative(grid, pr_mid["f_hat"])
        + pr_mid["d_hat"]
        + pr_mid["g_hat"]
    )
    return r_e, r_eps, r_osc


def ul2_norm(u_hat):
    """Uniformly local L2 norm: sup over window centers of the |u_hat|^2 mass
    in the strip x1 in [a-1, a+1], square-rooted.

    The window length rounds to the nearest grid multiple; requires a
    horizontal period of at least 2.
    """
    g = u_hat.grid
    if g.lam < 2.0:
        raise ValueError("ul2_norm requires a horizontal period >= 2")
    q = (_as_physical_data(u_hat.u1) ** 2 + _as_physical_data(u_hat.u2) ** 2).mean(axis=1)
    return _ul2_from_profile(g.dx, q)


def _ul2_from_profile(dx, q):
    n = q.shape[0]
    w = max(1, int(round(1.0 / dx)))
    idx = (np.arange(n)[:, None] - w + np.arange(2 * w)[None, :]) % n
    masses = q[idx].sum(axis=1) * dx
    return float(np.sqrt(masses.max()))


def fit_decay_rate(series, window, model):
    """Least-squares decay fit on log(value).

    model "exponential" returns the decay rate r in value ~ A exp(-r t);
    model "power" returns the exponent p in value ~ A t^p.  Requires at
    least 8 strictly positive samples inside the window.
    """
    if model not in ("power", "exponential"):
        raise ValueError(f"unknown fit model {model!r}")
    t = np.array([s[0] for s in series], dtype=np.float64)
    v = np.array([s[1] for s in series], dtype=np.float64)
    t_lo, t_hi = window
    keep = (t >= t_lo) & (t <= t_hi)
    t, v = t[keep], v[keep]
    if t.size < 8:
        raise ValueError(f"need at least 8 samples in the window, got {t.size}")
    if np.any(v <= 0.0):
        raise ValueError("decay fits require strictly positive values")
    y = np.log(v)
    x = np.log(t) if model == "power" else t
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt((resid**2).mean()))
    rate = float(slope) if model == "power" else float(-slope)
    return RateFit(model=model, exponent_or_rate=rate, window=(t_lo, t_hi), rms_log_residual=rms)


@dataclass
class _Snapshot:
    t: float
    state: FlowState
    fine: dict
    sup_u: float
    sup_omega: float
    sup_uhat: float
    ul2_uhat: float
    forcing_sup: float


@dataclass
class Trajectory:
    snapshots: list
    records: list
    options: DiagnosticsOptions
    center: float

    @property
    def times(self):
        return [s.t for s in self.snapshots]

    def series(self, key):
        """(t, value) series for a scalar snapshot attribute."""
        return [(s.t, getattr(s, key)) for s in self.snapshots]


class TrajectoryCollector:
    """Accumulates per-time diagnostics along a run and builds the records.

    Residual columns use centered differences, so they are filled for
    interior, equally spaced diagnostic times and left at zero on the ends.
    """

    def __init__(self, options=None):
        self.options = options or DiagnosticsOptions()
        self.snapshots = []
        self._center = None

    def add(self, state):
        ff = _FineFields(state)
        pr = ff.profiles()
        if self._center is None:
            if isinstance(self.options.center, str):
                if self.options.center != "argmax_e":
                    raise ValueError(f"unknown center policy {self.options.center!r}")
                self._center = float(ff.x1f[int(np.argmax(pr["e"]))])
            else:
                self._center = float(self.options.center)
        sup_u, sup_w, sup_uhat = _coarse_sups(ff)
        q = (ff.uh1**2 + ff.uh2**2).mean(axis=1)
        ul2 = _ul2_from_profile(ff.dxf, q) if state.grid.lam >= 2.0 else 0.0
        forcing_sup = float(np.abs(pr["forcing"]).max())
        self.snapshots.append(
            _Snapshot(
                t=state.t,
                state=state,
                fine=pr,
                sup_u=sup_u,
                sup_omega=sup_w,
                sup_uhat=sup_uhat,
                ul2_uhat=ul2,
                forcing_sup=forcing_sup,
            )
        )

    @property
    def center(self):
        return self._center

    def finalize(self):
        opts = self.options
        recs = []
        snaps = self.snapshots
        g = snaps[0].state.grid if snaps else None
        for i, s in enumerate(snaps):
            e_rho = _localized_sum_fine(g, s.fine["e"], opts.rho, self._center)
            d_rho = _localized_sum_fine(g, s.fine["d"], opts.rho, self._center)
            ens_rho = _localized_sum_fine(g, s.fine["eps"], opts.rho, self._center)
            ensd_rho = _localized_sum_fine(g, s.fine["delta"], opts.rho, self._center)
            r_e = r_eps = r_osc = 0.0
            if 0 < i < len(snaps) - 1:
                h1 = snaps[i].t - snaps[i - 1].t
                h2 = snaps[i + 1].t - snaps[i].t
                if abs(h1 - h2) <= 1e-9 * max(h1, 1e-300):
                    r_e, r_eps, r_osc = _residual_triple(
                        g, snaps[i - 1].fine, s.fine, snaps[i + 1].fine, h1
                    )
            recs.append(
                DiagnosticsRecord(
                    t=s.t,
                    sup_u=s.sup_u,
                    sup_omega=s.sup_omega,
                    sup_uhat=s.sup_uhat,
                    ru_t=s.sup_u,
                    romega_t=s.sup_omega,
                    e_rho=e_rho,
                    d_rho=d_rho,
                    ens_rho=ens_rho,
                    ensd_rho=ensd_rho,
                    ul2_uhat=s.ul2_uhat,
                    residual_energy=r_e,
                    residual_enstrophy=r_eps,
                    residual_oscillatory=r_osc,
                )
            )
        return recs

    def trajectory(self):
        return Trajectory(
            snapshots=self.snapshots,
            records=self.finalize(),
            options=self.options,
            center=self._center if self._center is not None else 0.0,
        )


@dataclass
class TheoremCheckConfig:
    """Inputs for the theorem-level report.

    c3 is the empirical flux constant from the constants ledger (beta =
    c3 (1+M)^2).  The vorticity-decay fit window defaults to
    [1, 0.1 (lam/2pi)^2] to precede the finite-box exponential crossover.
    """

    c3: float
    window: tuple = None
    t_grid: tuple = (1.0, 4.0, 16.0)
    tau: float = 0.1
    laminar_window: tuple = (0.05, 0.5)

    def vorticity_window(self, lam):
        if self.window is not None:
            return self.window
        return (1.0, 0.1 * (lam / (2.0 * np.pi)) ** 2)


def _snapshot_at(traj, t):
    for s in traj.snapshots:
        if abs(s.t - t) <= 1e-9 * max(1.0, abs(t)):
            return s
    raise ValueError(f"missing diagnostics at requested time t={t}")


def _trapezoid(ts, vs):
    return float(np.trapezoid(vs, ts)) if len(ts) > 1 else 0.0


def theorem_checks(traj, config):
    """Quantitative report on the theorem-shaped estimates for one run.

    Sections: (a) uniform velocity bound ratio; (b) vorticity-decay shape
    over the fit window; (c) localized energy/enstrophy bounds at the
    configured horizons with rho = 1/sqrt(beta T); (d) laminar-regime decay
    rates when kappa < 1; (e) the ul2-to-sup smoothing ratio at lag tau.
    """
    if not traj.snapshots:
        raise ValueError("empty trajectory")
    first = traj.snapshots[0]
    g = first.state.grid
    M = first.state.m0_norm
    e_star0 = float(first.fine["e"].max())
    ru0 = first.sup_u
    report = {
        "provenance": {
            "nx": g.nx,
            "ny": g.ny,
            "lambda": g.lam,
            "M": M,
            "e_star0": e_star0,
            "Ru0": ru0,
            "c3": config.c3,
        }
    }

    # (a) uniform velocity bound: Ru + M + (1+M) e_*(0) shape
    sup_u_all = max(s.sup_u for s in traj.snapshots)
    denom_a = ru0 + M + (1.0 + M) * e_star0
    report["velocity_bound"] = {
        "sup_u": sup_u_all,
        "denominator": denom_a,
        "ratio": sup_u_all / denom_a if denom_a > 0 else 0.0,
    }

    # (b) vorticity decay shape over the pre-crossover window
    t_lo, t_hi = config.vorticity_window(g.lam)
    in_win = [s for s in traj.snapshots if t_lo <= s.t <= t_hi]
    denom_b = (1.0 + M) * e_star0
    ratio_b = max((s.sup_omega**2 * math.sqrt(s.t) for s in in_win), default=0.0)
    report["vorticity_decay"] = {
        "window": (t_lo, t_hi),
        "samples": len(in_win),
        "ratio": ratio_b / denom_b if denom_b > 0 else 0.0,
    }

    # (c) localized energy and enstrophy bounds at the configured horizons
    beta = config.c3 * (1.0 + M) ** 2
    energy_rows, enstrophy_rows = [], []
    ts = np.array([s.t for s in traj.snapshots])
    for T in config.t_grid:
        if T > traj.snapshots[-1].t + 1e-9:
            continue
        rho = 1.0 / math.sqrt(beta * T)
        sT = _snapshot_at(traj, T)
        e_rho_T = _localized_sum_fine(g, sT.fine["e"], rho, traj.center)
        upto = [s for s in traj.snapshots if s.t <= T + 1e-12]
        d_vals = [_localized_sum_fine(g, s.fine["d"], rho, traj.center) for s in upto]
        int_d = _trapezoid([s.t for s in upto], d_vals)
        lhs = e_rho_T + 0.5 * int_d
        rhs = 4.0 * e_star0 * math.sqrt(beta * T)
        energy_rows.append({"T": T, "rho": rho, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0})

        ens_T = _localized_sum_fine(g, sT.fine["eps"], rho, traj.center)
        late = [s for s in upto if s.t >= T / 2.0 - 1e-12]
        dd_vals = [_localized_sum_fine(g, s.fine["delta"], rho, traj.center) for s in late]
        int_dd = _trapezoid([s.t for s in late], dd_vals)
        scale = (1.0 + M) * e_star0
        enstrophy_rows.append(
            {
                "T": T,
                "rho": rho,
                "lhs": ens_T + 0.5 * int_dd,
                "value": (ens_T + 0.5 * int_dd) * math.sqrt(T) / scale if scale > 0 else 0.0,
                "ens_value": ens_T * math.sqrt(T) / scale if scale > 0 else 0.0,
            }
        )
    report["localized_energy"] = energy_rows
    report["localized_enstrophy"] = enstrophy_rows

    # (d) laminar regime: exponential rates and the mean-flow forcing decay
    kappa = M / (4.0 * np.pi**2)
    laminar = {"kappa": kappa}
    if kappa < 1.0 and M > 0.0:
        laminar["rate_floor"] = 2.0 * np.pi**2 * (1.0 - kappa)
        for key, label in (("ul2_uhat", "ul2"), ("sup_uhat", "uhat"), ("forcing_sup", "forcing")):
            series = traj.series(key)
            peak = max((v for _, v in series), default=0.0)
            if peak < 1e-250:
                laminar[f"{label}_rate"] = "exact_zero"
                continue
            try:
                fit = fit_decay_rate(series, config.laminar_window, "exponential")
            except ValueError as exc:
                laminar[f"{label}_rate"] = f"unavailable: {exc}"
                continue
            laminar[f"{label}_rate"] = fit.exponent_or_rate
            laminar[f"{label}_rms"] = fit.rms_log_residual
        if isinstance(laminar.get("ul2_rate"), float):
            laminar["passes_floor"] = laminar["ul2_rate"] >= laminar["rate_floor"]
    report["laminar"] = laminar

    # (e) smoothing: sup |u_hat(t+tau)| against ul2(u_hat(t))
    pairs = []
    for s in traj.snapshots:
        target = s.t + config.tau
        try:
            s2 = _snapshot_at(traj, target)
        except ValueError:
            continue
        if s.ul2_uhat > 1e-13:
            pairs.append(s2.sup_uhat / s.ul2_uhat)
    report["smoothing"] = {
        "tau": config.tau,
        "pairs": len(pairs),
        "max_ratio": max(pairs) if pairs else 0.0,
    }
    return report
