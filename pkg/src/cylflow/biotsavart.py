"""Velocity reconstruction from vorticity on the cylinder.

The oscillating part of a divergence-free velocity field is recovered from
the vorticity through the kernel

    K(x1, x2) = log(2*cosh(2*pi*x1) - 2*cos(2*pi*x2)) / (4*pi),

the fundamental solution of the Laplacian on R x T.  The vertical mean of
the velocity cannot be recovered this way and is carried separately as the
pair (c, m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    PHYSICAL,
    SPECTRAL,
    Profile,
    ScalarField,
    VelocityField,
    _as_physical_data,
    _as_spectral_data,
    _inverse,
    dealias,
    spectral_derivative,
)

__all__ = [
    "Decomposition",
    "kernel_K",
    "grad_perp_K",
    "velocity_from_vorticity",
    "decompose",
    "pressure_from_state",
    "divergence_identity_residual",
    "divergence_residual",
    "curl",
    "velocity_by_kernel_quadrature",
]

# switch to the exp-factored kernel form well before cosh overflows
_STABLE_X1 = 5.0


def kernel_K(x1, x2):
    """Laplace fundamental solution on the cylinder, stable for large |x1|.

    Raises ValueError at the singular lattice points (0, 0) + Z^2.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a = 2.0 * np.pi * np.abs(x1)
    cos2 = np.cos(2.0 * np.pi * x2)
    small = a <= 2.0 * np.pi * _STABLE_X1
    # small |x1|: direct formula; large |x1|: factor out e^{2*pi*|x1|}
    arg_small = 2.0 * np.cosh(np.where(small, a, 0.0)) - 2.0 * cos2
    if np.any(small & (arg_small <= 0.0)):
        raise ValueError("kernel_K is singular at (0, 0) modulo the periodicity lattice")
    out_small = np.log(np.where(arg_small > 0.0, arg_small, 1.0)) / (4.0 * np.pi)
    out_large = np.abs(x1) / 2.0 + np.log1p(np.exp(-2.0 * a) - cos2 * np.exp(-a)) / (4.0 * np.pi)
    out = np.where(small, out_small, out_large)
    if out.ndim == 0:
        return float(out)
    return out


def grad_perp_K(x1, x2):
    """(-d2 K, d1 K), evaluated in overflow-safe form.

    Raises ValueError at the singular lattice points.
    """
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    a = 2.0 * np.pi * np.abs(x1)
    sgn = np.sign(x1)
    cos2 = np.cos(2.0 * np.pi * x2)
    sin2 = np.sin(2.0 * np.pi * x2)
    # cosh(2 pi x1) - cos(2 pi x2) = e^a * den / 2 with den below
    den = 1.0 + np.exp(-2.0 * a) - 2.0 * cos2 * np.exp(-a)
    if np.any(den <= 0.0):
        raise ValueError("grad_perp_K is singular at (0, 0) modulo the periodicity lattice")
    d1 = sgn * (1.0 - np.exp(-2.0 * a)) / (2.0 * den)
    d2 = sin2 * np.exp(-a) / den
    if d1.ndim == 0:
        return float(-d2), float(d1)
    return -d2, d1


def velocity_from_vorticity(omega_osc):
    """Biot-Savart inversion of omega = d1 u2 - d2 u1 on the n != 0 modes:
    u_hat(k) = i*(k2, -k1)/|k|^2 * omega_hat(k).

    The input must have zero vertical average (the n = 0 slice carries the
    mean flow, which this law cannot recover).  Returns a spectral
    divergence-free VelocityField whose curl equals the input.
    """
    g = omega_osc.grid
    w = _as_spectral_data(omega_osc)
    scale = np.abs(w).max()
    n0 = np.abs(w[:, 0]).max()
    if scale > 0.0 and n0 > 1e-10 * scale:
        raise ValueError(
            "vorticity has a nonzero vertical average; the mean flow cannot be "
            "reconstructed from the vorticity"
        )
    w = w.copy()
    w[:, 0] = 0.0
    psi = -w * g.inv_ksq  # streamfunction, lap psi = omega
    u1 = -1j * g.k2_odd[None, :] * psi
    u2 = 1j * g.k1_odd[:, None] * psi
    return VelocityField(ScalarField(g, u1, SPECTRAL), ScalarField(g, u2, SPECTRAL))


def curl(u):
    """Vorticity d1 u2 - d2 u1 in the representation of the input."""
    a = spectral_derivative(u.u2, axis=1)
    b = spectral_derivative(u.u1, axis=2)
    return ScalarField(u.grid, a.data - b.data, u.repr)


def divergence_residual(u):
    """Relative spectral residual of div u = 0."""
    g = u.grid
    d = 1j * g.k1_odd[:, None] * _as_spectral_data(u.u1) + 1j * g.k2_odd[None, :] * _as_spectral_data(u.u2)
    scale = max(np.abs(_as_spectral_data(u.u1)).max(), np.abs(_as_spectral_data(u.u2)).max())
    if scale == 0.0:
        return 0.0
    return float(np.abs(d).max() / scale)


@dataclass
class Decomposition:
    """Velocity split u = (c, m(x1)) + u_hat with <u_hat_i> = 0 for every x1."""

    c: float
    m: Profile
    u_hat: VelocityField


def decompose(u, tol=1e-8):
    """Split a divergence-free velocity into Galilean constant, mean flow
    and the oscillating remainder.

    Raises ValueError if <u1>(x1) is not constant in x1 beyond tol (relative),
    which signals a non-divergence-free input.
    """
    g = u.grid
    u1 = _as_physical_data(u.u1)
    u2 = _as_physical_data(u.u2)
    m1 = u1.mean(axis=1)
    c = float(m1.mean())
    scale = max(np.abs(u1).max(), np.abs(u2).max(), 1e-300)
    if np.abs(m1 - c).max() > tol * scale:
        raise ValueError("<u1> varies with x1; the input velocity is not divergence-free")
    m = Profile(g, u2.mean(axis=1))
    hat1 = ScalarField(g, u1 - m1[:, None])
    hat2 = ScalarField(g, u2 - m.values[:, None])
    return Decomposition(c=c, m=m, u_hat=VelocityField(hat1, hat2))


def pressure_from_state(u, omega):
    """Solve -lap p = lap(u1^2) + 2 d2(omega u1) with zero-mean gauge.

    Products are formed on the physical grid and dealiased; the result is a
    physical ScalarField with zero domain mean.
    """
    g = u.grid
    u1 = _as_physical_data(u.u1)
    w = _as_physical_data(omega)
    q1 = dealias(ScalarField(g, np.fft.fft2(u1 * u1) / (g.nx * g.ny), SPECTRAL)).data
    q2 = dealias(ScalarField(g, np.fft.fft2(w * u1) / (g.nx * g.ny), SPECTRAL)).data
    rhs = -g.ksq * q1 + 2j * g.k2_odd[None, :] * q2
    p = rhs * g.inv_ksq
    p[0, 0] = 0.0
    return ScalarField(g, _inverse(g, p), PHYSICAL)


def divergence_identity_residual(u):
    """Scaled L2 residual of div((u.grad)u) = lap(u1^2) + 2 d2(omega u1).

    Both sides are evaluated pseudospectrally with dealiased products, so the
    residual vanishes at spectral accuracy for dealiased divergence-free
    fields.
    """
    g = u.grid
    u1 = _as_physical_data(u.u1)
    u2 = _as_physical_data(u.u2)
    sup = max(np.abs(u1).max(), np.abs(u2).max())
    if sup == 0.0:
        return 0.0

    def dhat(phys):  # dealiased coefficients of a grid product
        return np.fft.fft2(phys) / (g.nx * g.ny) * g.dealias_mask

    # derivatives of the (already band-limited) velocity need no dealiasing
    def deriv(phys, axis):
        spec = np.fft.fft2(phys) / (g.nx * g.ny)
        if axis == 1:
            spec = 1j * g.k1_odd[:, None] * spec
        else:
            spec = 1j * g.k2_odd[None, :] * spec
        return _inverse(g, spec)

    a1 = u1 * deriv(u1, 1) + u2 * deriv(u1, 2)
    a2 = u1 * deriv(u2, 1) + u2 * deriv(u2, 2)
    lhs = 1j * g.k1_odd[:, None] * dhat(a1) + 1j * g.k2_odd[None, :] * dhat(a2)

    w = deriv(u2, 1) - deriv(u1, 2)
    rhs = -g.ksq * dhat(u1 * u1) + 2j * g.k2_odd[None, :] * dhat(w * u1)

    # L2 norm via Parseval on the coefficient difference
    resid = float(np.sqrt(g.lam * (np.abs(lhs - rhs) ** 2).sum()))
    return resid / sup**2


def velocity_by_kernel_quadrature(omega_osc, n_images=8):
    """Reference Biot-Savart evaluation by direct kernel quadrature.

    Periodizes grad_perp_K over the horizontal period by summing images and
    evaluates the convolution as a cyclic sum (trapezoid quadrature with the
    singular node dropped).  Validation tool for coarse grids only; accuracy
    is limited by the quadrature near the kernel singularity.
    """
    g = omega_osc.grid
    w = _as_physical_data(omega_osc)
    # kernel sampled on displacement grid, image-summed in x1
    dx1 = g.x1[:, None] + np.zeros((1, g.ny))
    dx2 = np.zeros((g.nx, 1)) + g.x2[None, :]
    K1 = np.zeros((g.nx, g.ny))
    K2 = np.zeros((g.nx, g.ny))
    for p in range(-n_images, n_images + 1):
        sx1 = dx1 + p * g.lam
        sing = (np.abs(sx1) < 1e-14) & (np.abs(dx2 - np.round(dx2)) < 1e-14)
        safe_x1 = np.where(sing, 1.0, sx1)
        a, b = grad_perp_K(safe_x1, dx2)
        K1 += np.where(sing, 0.0, a)
        K2 += np.where(sing, 0.0, b)
    # cyclic convolution via FFT equals the direct double sum
    wh = np.fft.fft2(w)
    u1 = np.fft.ifft2(np.fft.fft2(K1) * wh).real * g.cell_area
    u2 = np.fft.ifft2(np.fft.fft2(K2) * wh).real * g.cell_area
    return VelocityField(ScalarField(g, u1), ScalarField(g, u2))
