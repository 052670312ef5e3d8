"""Periodic-grid field algebra on the flat 2D torus.

All other modules build on this one.  Fields live on a uniform n x n grid
over [0, L)^2 with nodes x_j = j*L/n.  Fourier coefficients follow the
normalized convention

    g_hat[k] = (1/|T^2|) * integral g(x) exp(-2*pi*i*k.x/L) dx,

so the k = 0 coefficient is the mean of the field and Parseval reads
||g||_L2^2 = |T^2| * sum_k |g_hat[k]|^2.  Coefficients are stored on the
numpy fft2 layout (fftfreq ordering in both axes).

Conventions baked in here and relied on elsewhere:

* first-derivative multipliers (gradient, divergence) zero the Nyquist
  row/column so odd-order derivatives stay real and skew-symmetric;
* the Laplacian keeps the full |2*pi*k/L|^2 symbol (even order, real);
* quadratic products of spectral fields are dealiased by the 2/3 rule
  (modes with max(|k1|,|k2|) > n//3 dropped);
* negative-order Sobolev norms use the literal sum
  sum_{k!=0} |g_hat_k|^2 |2*pi*k/L|^(2s), which on the unit torus agrees
  with the |T^2|-weighted Parseval form used for s >= 0.  For L != 1 the
  two conventions differ; runs on such tori carry a metadata flag.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "TorusGrid",
    "ScalarField",
    "VectorField",
    "transform_forward",
    "transform_inverse",
    "gradient",
    "divergence",
    "laplacian",
    "leray_project",
    "invert_laplacian",
    "phase_shift",
    "dealias",
    "dealiased_product",
    "sobolev_norm",
    "sup_norm",
    "mean",
]


class TorusGrid:
    """Uniform periodic grid on [0, L)^2 with cached spectral machinery.

    Parameters
    ----------
    n : points per dimension; must be even and >= 8 (powers of two are
        the intended use and fastest for the FFT).
    length : side length L of the torus (default 1.0).
    """

    def __init__(self, n: int, length: float = 1.0):
        if n < 8 or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got {n}")
        if length <= 0:
            raise ValueError(f"torus side length must be positive, got {length}")
        self.n = int(n)
        self.length = float(length)
        self.h = self.length / self.n
        self.area = self.length ** 2
        self.cell_area = self.h ** 2

        # Integer wavenumber lattice k in {-n/2, ..., n/2-1} on fft layout,
        # angular frequencies 2*pi*k/L.
        k_int = np.fft.fftfreq(self.n, d=1.0 / self.n)
        two_pi_over_l = 2.0 * np.pi / self.length
        self.kx = (two_pi_over_l * k_int)[:, None] * np.ones((1, self.n))
        self.ky = np.ones((self.n, 1)) * (two_pi_over_l * k_int)[None, :]
        self.k_sq = self.kx ** 2 + self.ky ** 2

        # First-derivative multipliers: Nyquist row/column zeroed.
        nyq = -(self.n // 2)
        deriv_mask_1d = np.where(k_int == nyq, 0.0, 1.0)
        self.ikx = 1j * self.kx * deriv_mask_1d[:, None]
        self.iky = 1j * self.ky * deriv_mask_1d[None, :]
        self.k_sq_deriv = (self.kx * deriv_mask_1d[:, None]) ** 2 + (
            self.ky * deriv_mask_1d[None, :]
        ) ** 2

        with np.errstate(divide="ignore"):
            inv = np.where(self.k_sq > 0, 1.0 / np.where(self.k_sq > 0, self.k_sq, 1.0), 0.0)
        self.inv_k_sq = inv
        inv_d = np.where(
            self.k_sq_deriv > 0, 1.0 / np.where(self.k_sq_deriv > 0, self.k_sq_deriv, 1.0), 0.0
        )
        self.inv_k_sq_deriv = inv_d

        # 2/3-rule mask on the integer lattice.
        cutoff = self.n // 3
        keep_1d = np.abs(k_int) <= cutoff
        self.dealias_mask = keep_1d[:, None] & keep_1d[None, :]

        x1 = np.arange(self.n) * self.h
        self.x1, self.x2 = np.meshgrid(x1, x1, indexing="ij")

    def __eq__(self, other):
        return (
            isinstance(other, TorusGrid)
            and self.n == other.n
            and self.length == other.length
        )

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return f"TorusGrid(n={self.n}, length={self.length})"

    # fft helpers on the normalized convention
    def fft(self, values):
        return np.fft.fft2(values) / (self.n * self.n)

    def ifft(self, coeffs):
        return np.fft.ifft2(coeffs * (self.n * self.n)).real


def _check_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


class ScalarField:
    """Real scalar samples on a TorusGrid with a lazily cached spectrum."""

    def __init__(self, grid: TorusGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n, grid.n):
            raise ValueError(
                f"scalar field shape {values.shape} does not match grid {grid.n}x{grid.n}"
            )
        self.grid = grid
        self.values = values
        self._hat = None

    @classmethod
    def from_hat(cls, grid: TorusGrid, hat: np.ndarray) -> "ScalarField":
        f = cls(grid, grid.ifft(hat))
        f._hat = np.asarray(hat, dtype=complex)
        return f

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = self.grid.fft(self.values)
        return self._hat

    def mean(self) -> float:
        return float(self.values.mean())

    def integral(self) -> float:
        """Grid quadrature of the field over the torus."""
        return float(self.values.sum() * self.grid.cell_area)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def __add__(self, other):
        _check_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            _check_grid(self, c)
            return ScalarField(self.grid, self.values * c.values)
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


class VectorField:
    """Two-component real field; component arrays stacked on axis 0."""

    def __init__(self, grid: TorusGrid, values: np.ndarray, div_free: bool = False):
        values = np.asarray(values, dtype=float)
        if values.shape != (2, grid.n, grid.n):
            raise ValueError(
                f"vector field shape {values.shape} does not match (2, {grid.n}, {grid.n})"
            )
        self.grid = grid
        self.values = values
        self.div_free = div_free
        self._hat = None

    @classmethod
    def from_hat(cls, grid: TorusGrid, hat: np.ndarray, div_free: bool = False) -> "VectorField":
        hat = np.asarray(hat, dtype=complex)
        vals = np.stack([grid.ifft(hat[0]), grid.ifft(hat[1])])
        f = cls(grid, vals, div_free=div_free)
        f._hat = hat
        return f

    @classmethod
    def constant(cls, grid: TorusGrid, c) -> "VectorField":
        c = np.asarray(c, dtype=float)
        vals = np.empty((2, grid.n, grid.n))
        vals[0] = c[0]
        vals[1] = c[1]
        return cls(grid, vals, div_free=True)

    @property
    def hat(self) -> np.ndarray:
        if self._hat is None:
            self._hat = np.stack([self.grid.fft(self.values[0]), self.grid.fft(self.values[1])])
        return self._hat

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=(1, 2))

    def integral(self) -> np.ndarray:
        return self.values.sum(axis=(1, 2)) * self.grid.cell_area

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy(), div_free=self.div_free)

    def __add__(self, other):
        _check_grid(self, other)
        return VectorField(self.grid, self.values + other.values,
                           div_free=self.div_free and other.div_free)

    def __sub__(self, other):
        _check_grid(self, other)
        return VectorField(self.grid, self.values - other.values,
                           div_free=self.div_free and other.div_free)

    def __mul__(self, c):
        if isinstance(c, ScalarField):
            _check_grid(self, c)
            return VectorField(self.grid, self.values * c.values[None])
        return VectorField(self.grid, self.values * c, div_free=self.div_free)

    __rmul__ = __mul__


Field = ScalarField | VectorField


def transform_forward(field: Field) -> np.ndarray:
    """Normalized Fourier coefficients of a field (fft2 layout)."""
    return field.hat.copy()


def transform_inverse(grid: TorusGrid, coeffs: np.ndarray) -> Field:
    """Field from normalized coefficients; inverse of transform_forward."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape == (grid.n, grid.n):
        return ScalarField.from_hat(grid, coeffs)
    if coeffs.shape == (2, grid.n, grid.n):
        return VectorField.from_hat(grid, coeffs)
    raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.n}x{grid.n}")


def gradient(s: ScalarField) -> VectorField:
    g = s.grid
    hat = s.hat
    return VectorField.from_hat(g, np.stack([g.ikx * hat, g.iky * hat]))


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    hat = v.hat
    return ScalarField.from_hat(g, g.ikx * hat[0] + g.iky * hat[1])


def laplacian(field: Field) -> Field:
    g = field.grid
    if isinstance(field, ScalarField):
        return ScalarField.from_hat(g, -g.k_sq * field.hat)
    return VectorField.from_hat(g, -g.k_sq[None] * field.hat)


def leray_project(v: VectorField) -> VectorField:
    """Divergence-free part of v: identity minus grad(invlap(div)).

    The zero mode (mean component) passes through untouched.
    """
    g = v.grid
    hat = v.hat
    d = g.ikx * hat[0] + g.iky * hat[1]
    # gradient part is grad(invlap(div v)), whose spectrum is -ik d/|k|^2
    phi = d * g.inv_k_sq_deriv
    out = np.stack([hat[0] + g.ikx * phi, hat[1] + g.iky * phi])
    return VectorField.from_hat(g, out, div_free=True)


def invert_laplacian(s: ScalarField, mean_tol: float = 1e-10) -> ScalarField:
    """Mean-free solution of laplacian(out) = s.

    Rejects inputs whose mean exceeds mean_tol * ||s||_L2 (the operator is
    only invertible on the mean-free complement).
    """
    g = s.grid
    l2 = sobolev_norm(s, 0.0)
    if abs(s.mean()) > mean_tol * max(l2, 1e-300):
        raise ValueError(
            f"invert_laplacian needs a mean-free input: |mean|={abs(s.mean()):.3e}, "
            f"||input||_L2={l2:.3e}"
        )
    hat = -s.hat * g.inv_k_sq
    hat[0, 0] = 0.0
    return ScalarField.from_hat(g, hat)


def phase_shift(field: Field, offset) -> Field:
    """g(.) -> g(. + offset), exact for band-limited fields."""
    g = field.grid
    offset = np.asarray(offset, dtype=float)
    phase = np.exp(1j * (g.kx * offset[0] + g.ky * offset[1]))
    if isinstance(field, ScalarField):
        return ScalarField.from_hat(g, field.hat * phase)
    return VectorField.from_hat(g, field.hat * phase[None], div_free=field.div_free)


def dealias(field: Field) -> Field:
    g = field.grid
    if isinstance(field, ScalarField):
        return ScalarField.from_hat(g, field.hat * g.dealias_mask)
    return VectorField.from_hat(g, field.hat * g.dealias_mask[None], div_free=field.div_free)


def dealiased_product(a: ScalarField, b: ScalarField) -> ScalarField:
    """2/3-rule product of two spectral scalar fields."""
    _check_grid(a, b)
    g = a.grid
    at = g.ifft(a.hat * g.dealias_mask)
    bt = g.ifft(b.hat * g.dealias_mask)
    return ScalarField.from_hat(g, g.fft(at * bt) * g.dealias_mask)


def sobolev_norm(field: Field, s: float) -> float:
    """Homogeneous Sobolev norm of order s (s=0: L2 including the mean).

    s < 0 excludes the zero mode and requires a mean-free input; the value
    is the literal lattice sum sum_{k!=0} |g_hat|^2 |2 pi k/L|^(2s).  For
    s >= 0 the |T^2|-weighted Parseval form is used so s=0 is the L2 norm
    and s=1 on a fluctuation is ||grad g||_L2.
    """
    g = field.grid
    hat = field.hat
    power = np.abs(hat) ** 2
    if power.ndim == 3:
        power = power.sum(axis=0)
        mean_sq = float(np.sum(np.abs(hat[:, 0, 0]) ** 2))
    else:
        mean_sq = float(np.abs(hat[0, 0]) ** 2)
    if s < 0:
        l2_sq = g.area * power.sum()
        if mean_sq > (1e-10) ** 2 * max(l2_sq, 1e-300):
            raise ValueError(
                "negative-order Sobolev norm requires a mean-free field "
                f"(|mean|^2={mean_sq:.3e}, ||field||_L2^2={l2_sq:.3e})"
            )
        safe = np.where(g.k_sq > 0, g.k_sq, 1.0)
        weight = np.where(g.k_sq > 0, safe ** s, 0.0)
        return float(np.sqrt(np.sum(power * weight)))
    if s == 0:
        return float(np.sqrt(g.area * power.sum()))
    safe = np.where(g.k_sq > 0, g.k_sq, 1.0)
    weight = np.where(g.k_sq > 0, safe ** s, 0.0)
    return float(np.sqrt(g.area * np.sum(power * weight)))


def sup_norm(field: Field) -> float:
    """Grid maximum: |values| for scalars, Euclidean node norm for vectors."""
    if isinstance(field, ScalarField):
        return float(np.abs(field.values).max())
    return float(np.sqrt((field.values ** 2).sum(axis=0)).max())


def mean(field: Field):
    return field.mean()
