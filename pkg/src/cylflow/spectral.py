"""Spectral grids, fields and transforms on the periodic cylinder.

The domain is a horizontally truncated cylinder: periodic with period
``lam`` in x1 (the long, "horizontal" direction) and period 1 in x2 (the
"vertical" circle).  Fields live either on the physical grid (real64,
shape (nx, ny), x1 along axis 0) or as normalized Fourier coefficients
(complex128, same shape, numpy fft layout), so that

    f(x) = sum_{j,n} F[j, n] * exp(i*(k1[j]*x1 + k2[n]*x2)),

with k1[j] = 2*pi*j/lam and k2[n] = 2*pi*n.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PHYSICAL",
    "SPECTRAL",
    "SpectralGrid",
    "ScalarField",
    "VelocityField",
    "Profile",
    "make_grid",
    "to_spectral",
    "to_physical",
    "spectral_derivative",
    "dealias",
    "vertical_average",
    "integral",
    "lp_norm",
    "sup_norm",
    "parseval_spectral_sum",
    "profile_derivative",
    "profile_integral",
    "circular_distance",
]

PHYSICAL = "physical"
SPECTRAL = "spectral"


class SpectralGrid:
    """Uniform grid on the truncated cylinder with precomputed wavenumbers."""

    def __init__(self, nx, ny, lam):
        if nx < 8 or ny < 8:
            raise ValueError(f"grid sizes must be >= 8, got nx={nx}, ny={ny}")
        if nx % 2 or ny % 2:
            raise ValueError(f"grid sizes must be even, got nx={nx}, ny={ny}")
        if not (lam > 0):
            raise ValueError(f"horizontal period must be positive, got {lam}")
        self.nx = int(nx)
        self.ny = int(ny)
        self.lam = float(lam)
        self.dx = self.lam / self.nx
        self.dy = 1.0 / self.ny
        self.cell_area = self.dx * self.dy
        self.x1 = self.dx * np.arange(self.nx)
        self.x2 = self.dy * np.arange(self.ny)
        # integer mode indices in fft ordering, and the wavenumber tables
        self.j1 = np.fft.fftfreq(self.nx, d=1.0 / self.nx).astype(np.int64)
        self.j2 = np.fft.fftfreq(self.ny, d=1.0 / self.ny).astype(np.int64)
        self.k1 = 2.0 * np.pi * self.j1 / self.lam
        self.k2 = 2.0 * np.pi * self.j2.astype(np.float64)
        # derivative tables with the Nyquist mode zeroed (odd derivatives only)
        self.k1_odd = self.k1.copy()
        self.k1_odd[self.nx // 2] = 0.0
        self.k2_odd = self.k2.copy()
        self.k2_odd[self.ny // 2] = 0.0
        self.ksq = (self.k1**2)[:, None] + (self.k2**2)[None, :]
        self.inv_ksq = np.zeros_like(self.ksq)
        self.inv_ksq[self.ksq > 0.0] = 1.0 / self.ksq[self.ksq > 0.0]
        # two-thirds rule: keep |j| <= nx/3 and |n| <= ny/3
        keep1 = np.abs(self.j1) <= self.nx / 3.0
        keep2 = np.abs(self.j2) <= self.ny / 3.0
        self.dealias_mask = keep1[:, None] & keep2[None, :]

    def __repr__(self):
        return f"SpectralGrid(nx={self.nx}, ny={self.ny}, lam={self.lam})"

    def __eq__(self, other):
        return (
            isinstance(other, SpectralGrid)
            and self.nx == other.nx
            and self.ny == other.ny
            and self.lam == other.lam
        )

    def __hash__(self):
        return hash((self.nx, self.ny, self.lam))

    def meshgrid(self):
        """Physical coordinates as broadcastable (nx,1), (1,ny) arrays."""
        return self.x1[:, None], self.x2[None, :]


def make_grid(nx, ny, lam):
    """Build a SpectralGrid; rejects odd or undersized grids and lam <= 0."""
    return SpectralGrid(nx, ny, lam)


class ScalarField:
    """Scalar field on a grid, in physical or spectral representation."""

    def __init__(self, grid, data, repr=PHYSICAL):
        if repr not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation {repr!r}")
        data = np.asarray(data)
        if data.shape != (grid.nx, grid.ny):
            raise ValueError(f"data shape {data.shape} does not match grid {(grid.nx, grid.ny)}")
        if repr == PHYSICAL:
            data = np.ascontiguousarray(data, dtype=np.float64)
        else:
            data = np.ascontiguousarray(data, dtype=np.complex128)
        self.grid = grid
        self.repr = repr
        self.data = data

    def __repr__(self):
        return f"ScalarField({self.grid!r}, repr={self.repr!r})"

    def copy(self):
        return ScalarField(self.grid, self.data.copy(), self.repr)

    @classmethod
    def zeros(cls, grid, repr=PHYSICAL):
        dtype = np.float64 if repr == PHYSICAL else np.complex128
        return cls(grid, np.zeros((grid.nx, grid.ny), dtype=dtype), repr)

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(x1, x2) on the physical grid (fn must broadcast)."""
        x1, x2 = grid.meshgrid()
        return cls(grid, np.broadcast_to(fn(x1, x2), (grid.nx, grid.ny)).astype(np.float64))


class VelocityField:
    """Pair of scalar fields (u1, u2) on a common grid and representation."""

    def __init__(self, u1, u2):
        if u1.grid != u2.grid:
            raise ValueError("velocity components must share a grid")
        if u1.repr != u2.repr:
            raise ValueError("velocity components must share a representation")
        self.u1 = u1
        self.u2 = u2

    @property
    def grid(self):
        return self.u1.grid

    @property
    def repr(self):
        return self.u1.repr


class Profile:
    """Function of x1 alone (vertical averages and their derived profiles)."""

    def __init__(self, grid, values):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (grid.nx,):
            raise ValueError(f"profile length {values.shape} does not match nx={grid.nx}")
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"Profile({self.grid!r})"


def _forward(grid, phys):
    return np.fft.fft2(phys) / (grid.nx * grid.ny)


def _inverse(grid, spec):
    return np.fft.ifft2(spec * (grid.nx * grid.ny)).real


def to_spectral(f):
    """Forward transform; rejects fields already in spectral representation."""
    if f.repr != PHYSICAL:
        raise ValueError("to_spectral expects a physical-representation field")
    return ScalarField(f.grid, _forward(f.grid, f.data), SPECTRAL)


def to_physical(f):
    """Inverse transform; rejects fields already in physical representation."""
    if f.repr != SPECTRAL:
        raise ValueError("to_physical expects a spectral-representation field")
    return ScalarField(f.grid, _inverse(f.grid, f.data), PHYSICAL)


def _as_spectral_data(f):
    if f.repr == SPECTRAL:
        return f.data
    return _forward(f.grid, f.data)


def _as_physical_data(f):
    if f.repr == PHYSICAL:
        return f.data
    return _inverse(f.grid, f.data)


def spectral_derivative(f, axis, order=1):
    """Differentiate by multiplying with (i*k_axis)**order in spectral space.

    The Nyquist mode is zeroed for odd orders.  Returns a field in the same
    representation as the input.
    """
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    if order < 1 or order != int(order):
        raise ValueError(f"order must be a positive integer, got {order}")
    g = f.grid
    if axis == 1:
        k = g.k1_odd if order % 2 else g.k1
        mult = ((1j * k) ** order)[:, None]
    else:
        k = g.k2_odd if order % 2 else g.k2
        mult = ((1j * k) ** order)[None, :]
    spec = _as_spectral_data(f) * mult
    if f.repr == PHYSICAL:
        return ScalarField(g, _inverse(g, spec), PHYSICAL)
    return ScalarField(g, spec, SPECTRAL)


def dealias(f):
    """Two-thirds rule: zero all modes with |j| > nx/3 or |n| > ny/3."""
    if f.repr != SPECTRAL:
        raise ValueError("dealias expects a spectral-representation field")
    return ScalarField(f.grid, f.data * f.grid.dealias_mask, SPECTRAL)


def vertical_average(f):
    """Average over the vertical circle, <f>(x1) = int_T f(x1, x2) dx2.

    Computed from the n = 0 spectral slice (exact for band-limited fields);
    in physical representation this is the plain mean over x2 samples.
    """
    g = f.grid
    if f.repr == PHYSICAL:
        return Profile(g, f.data.mean(axis=1))
    vals = np.fft.ifft(f.data[:, 0] * g.nx).real
    return Profile(g, vals)


def integral(f):
    """Quadrature of the field over the box (exact for the trig interpolant)."""
    return _as_physical_data(f).sum() * f.grid.cell_area


def lp_norm(f, p):
    """L^p norm by grid quadrature; p = inf gives the grid max of |f|."""
    phys = _as_physical_data(f)
    if p == np.inf or p == "inf":
        return float(np.abs(phys).max())
    if p <= 0:
        raise ValueError(f"p must be positive or inf, got {p}")
    return float((np.abs(phys) ** p).sum() * f.grid.cell_area) ** (1.0 / p)


def sup_norm(f):
    return lp_norm(f, np.inf)


def parseval_spectral_sum(f):
    """Spectral side of the Parseval identity: lam * sum |F|^2."""
    spec = _as_spectral_data(f)
    return float(f.grid.lam * (np.abs(spec) ** 2).sum())


def profile_derivative(p, order=1):
    """Spectral x1-derivative of a profile (Nyquist zeroed for odd orders)."""
    g = p.grid
    k = g.k1_odd if order % 2 else g.k1
    spec = np.fft.fft(p.values) * (1j * k) ** order
    return Profile(g, np.fft.ifft(spec).real)


def profile_integral(p):
    return float(p.values.sum() * p.grid.dx)


def circular_distance(x, a, period):
    """Distance on a circle of the given period."""
    d = np.abs(np.asarray(x, dtype=np.float64) - a) % period
    return np.minimum(d, period - d)
