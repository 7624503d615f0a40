import numpy as np
import pytest

from cylflow.spectral import ScalarField, make_grid


@pytest.fixture
def grid64():
    return make_grid(64, 64, 16.0)


@pytest.fixture
def grid32():
    return make_grid(32, 32, 8.0)


def random_band_limited(grid, seed, band=4, zero_mean_column=False):
    """Real band-limited field; optionally zero the n = 0 slice."""
    rng = np.random.default_rng(seed)
    spec = np.fft.fft2(rng.standard_normal((grid.nx, grid.ny))) / (grid.nx * grid.ny)
    keep = (np.abs(grid.j1)[:, None] <= band) & (np.abs(grid.j2)[None, :] <= band)
    spec = spec * keep
    spec[0, 0] = 0.0
    if zero_mean_column:
        spec[:, 0] = 0.0
    return ScalarField(grid, np.fft.ifft2(spec * (grid.nx * grid.ny)).real)


def mode_indexed_field(grid, seed, band=5, zero_mean_column=False):
    """Random band-limited field whose coefficients are drawn per mode index,
    so the same seed yields the same continuum field on every grid."""
    rng = np.random.default_rng(seed)
    m = 2 * band + 1
    raw = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    herm = 0.5 * (raw + np.conj(raw[::-1, ::-1]))
    spec = np.zeros((grid.nx, grid.ny), dtype=complex)
    for j in range(-band, band + 1):
        for n in range(-band, band + 1):
            spec[j % grid.nx, n % grid.ny] = herm[j + band, n + band]
    spec[0, 0] = 0.0
    if zero_mean_column:
        spec[:, 0] = 0.0
    return ScalarField(grid, np.fft.ifft2(spec * (grid.nx * grid.ny)).real)


def vertical_average_quadrature(fn, x1_values, n_quad=4096):
    """Independent oracle: trapezoid quadrature of fn(x1, x2) over the
    vertical circle at each requested x1."""
    x2 = np.linspace(0.0, 1.0, n_quad, endpoint=False)
    return np.array([fn(x1, x2).mean() for x1 in x1_values])
