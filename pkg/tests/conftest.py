import numpy as np
import pytest

from vns2d.spectral import ScalarField, TorusGrid, VectorField, leray_project


@pytest.fixture
def grid16():
    return TorusGrid(16)


@pytest.fixture
def grid32():
    return TorusGrid(32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_scalar(grid, rng, dealiased=True, mean_free=False):
    """Smooth random field with a decaying spectrum."""
    hat = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    decay = 1.0 / (1.0 + grid.k_sq)
    hat = hat * decay
    if dealiased:
        hat = hat * grid.dealias_mask
    vals = grid.ifft(hat)
    f = ScalarField(grid, vals)
    if mean_free:
        f = ScalarField(grid, vals - vals.mean())
    return f


def random_solenoidal(grid, rng, dealiased=True):
    vals = np.stack(
        [random_scalar(grid, rng, dealiased).values, random_scalar(grid, rng, dealiased).values]
    )
    return leray_project(VectorField(grid, vals))


def lowmode_scalar(grid, rng, k_max=3, mean_free=False):
    """Random field supported on integer modes |k| <= k_max."""
    hat = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    k = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    keep = (np.abs(k)[:, None] <= k_max) & (np.abs(k)[None, :] <= k_max)
    hat = hat * keep
    if mean_free:
        hat[0, 0] = 0.0
    vals = grid.ifft(hat)
    vals = vals / max(np.abs(vals).max(), 1e-300)
    return ScalarField(grid, vals)


def lowmode_solenoidal(grid, rng, k_max=3):
    vals = np.stack(
        [lowmode_scalar(grid, rng, k_max).values, lowmode_scalar(grid, rng, k_max).values]
    )
    return leray_project(VectorField(grid, vals))


@pytest.fixture
def random_fields():
    return random_scalar, random_solenoidal
