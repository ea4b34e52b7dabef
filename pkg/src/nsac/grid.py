"""Periodic grids, Fourier transforms and spectral operators.

Fields are plain numpy arrays.  A scalar field in physical space has shape
``grid.shape``; a vector field stacks its ``d`` components on a leading axis,
shape ``(d, *grid.shape)``.  Spectral coefficients use the half-complex
(``rfftn``) layout, shape ``grid.spectral_shape``, normalised so that

    f(x) = sum_k  c_k exp(i k.x),       ||f||_2^2 = V * sum_k |c_k|^2

where the sum runs over the *full* Hermitian set of modes.  Sums over the
stored half use :attr:`Grid.weights` to count each conjugate pair twice.
"""

from __future__ import annotations

import sys

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, InvalidGrid, NonFiniteData, ZeroModeUndefined

__all__ = ["Grid", "make_grid", "random_field"]

# relative size below which a zero-mode coefficient counts as absent
ZERO_MODE_TOL = 1e-14


class Grid:
    """Uniform periodic grid on ``prod_i [0, L_i)``.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    sizes : sequence of int
        Points per axis; each even and at least 8.
    lengths : sequence of float
        Box length per axis.
    """

    def __init__(self, dim, sizes, lengths):
        if dim not in (1, 2, 3):
            raise InvalidGrid(f"dim must be 1, 2 or 3, got {dim!r}")
        sizes = tuple(int(n) for n in sizes)
        lengths = tuple(float(x) for x in lengths)
        if len(sizes) != dim or len(lengths) != dim:
            raise InvalidGrid(f"need {dim} sizes and lengths, got {sizes}, {lengths}")
        for n in sizes:
            if n < 8 or n % 2:
                raise InvalidGrid(f"grid sizes must be even and >= 8, got {sizes}")
        for length in lengths:
            if not (np.isfinite(length) and length > 0):
                raise InvalidGrid(f"box lengths must be positive, got {lengths}")
        npoints = int(np.prod(sizes))
        if npoints * 16 > sys.maxsize:
            raise InvalidGrid(f"{npoints} points exceed the addressable field size")

        self.dim = dim
        self.sizes = sizes
        self.lengths = lengths
        self.shape = sizes
        self.spectral_shape = sizes[:-1] + (sizes[-1] // 2 + 1,)
        self.npoints = npoints
        self.volume = float(np.prod(lengths))
        self.cell_volume = self.volume / npoints
        self.spacing = tuple(length / n for length, n in zip(lengths, sizes))

        # signed frequency index and angular wavenumber tables, full layout
        self.signed_indices = tuple(np.fft.fftfreq(n, 1.0 / n) for n in sizes)
        self.wavenumbers = tuple(
            2 * np.pi * m / length for m, length in zip(self.signed_indices, lengths)
        )

        # broadcastable wavevector components in the half-complex layout
        k_axes, kd_axes, m_axes = [], [], []
        for axis, (n, k) in enumerate(zip(sizes, self.wavenumbers)):
            m = self.signed_indices[axis]
            if axis == dim - 1:
                k = np.abs(k[: n // 2 + 1])
                m = np.abs(m[: n // 2 + 1])
            kd = k.copy()
            kd[n // 2] = 0.0  # odd derivatives of the Nyquist mode are not representable
            view = [1] * dim
            view[axis] = k.size
            k_axes.append(k.reshape(view))
            kd_axes.append(kd.reshape(view))
            m_axes.append(np.abs(m).reshape(view))
        self.k = tuple(k_axes)
        self.kd = tuple(kd_axes)

        k2 = np.zeros(self.spectral_shape)
        for k in self.k:
            k2 = k2 + k**2
        self.k2 = k2
        self.kmag = np.sqrt(k2)
        kd2 = np.zeros(self.spectral_shape)
        for k in self.kd:
            kd2 = kd2 + k**2
        self.kd2 = kd2

        keep = np.ones(self.spectral_shape, dtype=bool)
        for n, m in zip(sizes, m_axes):
            keep = keep & (m <= n / 3)
        self.dealias_mask = keep

        w = np.full(self.spectral_shape[-1], 2.0)
        w[0] = 1.0
        w[-1] = 1.0  # Nyquist column (sizes are even)
        self.weights = np.broadcast_to(w, self.spectral_shape)

        self._lambda_cache = {}

    def __repr__(self):
        return f"Grid(dim={self.dim}, sizes={self.sizes}, lengths={self.lengths})"

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.dim, self.sizes, self.lengths) == (other.dim, other.sizes, other.lengths)

    def __hash__(self):
        return hash((self.dim, self.sizes, self.lengths))

    @property
    def k_min(self):
        """Smallest nonzero wavenumber magnitude."""
        return 2 * np.pi / max(self.lengths)

    @property
    def dealias_kmax(self):
        """Largest wavenumber magnitude guaranteed to survive :meth:`dealias`."""
        return min(2 * np.pi * np.floor(n / 3) / length for n, length in zip(self.sizes, self.lengths))

    @property
    def nyquist_kmax(self):
        return min(np.pi * n / length for n, length in zip(self.sizes, self.lengths))

    def coords(self):
        """Physical coordinates as a list of broadcastable ``ij`` mesh arrays."""
        axes = [np.arange(n) * length / n for n, length in zip(self.sizes, self.lengths)]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    # -- validation -------------------------------------------------------
    def check_real(self, f, vector=False):
        f = np.asarray(f, dtype=float)
        expect = ((self.dim,) if vector else ()) + self.shape
        if f.shape[-self.dim:] != self.shape or (vector and f.shape != expect):
            raise GridMismatch(f"array of shape {f.shape} does not live on {self}")
        if not np.all(np.isfinite(f)):
            raise NonFiniteData("field contains NaN or Inf")
        return f

    def check_spectral(self, c, vector=False):
        c = np.asarray(c)
        expect = ((self.dim,) if vector else ()) + self.spectral_shape
        if c.shape[-self.dim:] != self.spectral_shape or (vector and c.shape != expect):
            raise GridMismatch(f"coefficients of shape {c.shape} do not live on {self}")
        return c

    # -- transforms -------------------------------------------------------
    def _axes(self, arr):
        return tuple(range(arr.ndim - self.dim, arr.ndim))

    def fwd(self, f):
        """Unchecked forward transform (hot path)."""
        return sfft.rfftn(f, axes=self._axes(f), norm="forward")

    def inv(self, c):
        """Unchecked inverse transform (hot path)."""
        return sfft.irfftn(c, s=self.shape, axes=self._axes(c), norm="forward")

    def forward(self, f):
        """Fourier coefficients of a real field (scalar or stacked components)."""
        return self.fwd(self.check_real(f))

    def inverse(self, c):
        """Real field with the given coefficients."""
        c = self.check_spectral(c)
        if not np.all(np.isfinite(c)):
            raise NonFiniteData("coefficients contain NaN or Inf")
        return self.inv(c)

    def to_full(self, c):
        """Expand half-complex coefficients to the full ``fftn`` layout."""
        return sfft.fftn(self.inv(c), axes=self._axes(c), norm="forward")

    # -- quadratic forms --------------------------------------------------
    def l2sq(self, c):
        """``||f||_2^2`` from coefficients; vector inputs sum over components."""
        return self.volume * float(np.sum(self.weights * (c.real**2 + c.imag**2)))

    def inner(self, a, b):
        """Real ``L^2`` inner product of two fields given by coefficients."""
        return self.volume * float(np.sum(self.weights * (a.real * b.real + a.imag * b.imag)))

    # -- multipliers ------------------------------------------------------
    def lambda_multiplier(self, s):
        s = float(s)
        mult = self._lambda_cache.get(s)
        if mult is None:
            with np.errstate(divide="ignore"):
                mult = np.where(self.kmag > 0, self.kmag ** s, 1.0 if s == 0 else 0.0)
            self._lambda_cache[s] = mult
        return mult

    def apply_lambda(self, c, s):
        """Multiply coefficients by ``|k|**s`` (the operator Lambda^s).

        For ``s < 0`` the zero mode has no image; a field whose mean is not
        negligible raises :class:`ZeroModeUndefined`.
        """
        c = self.check_spectral(c)
        if s < 0:
            zero = c[(...,) + (0,) * self.dim]
            scale = np.sqrt(np.sum(self.weights * np.abs(c) ** 2))
            if np.any(np.abs(zero) > ZERO_MODE_TOL * scale):
                raise ZeroModeUndefined(
                    f"Lambda^{s} needs a zero-mean field (mean coefficient {np.max(np.abs(zero)):.3e})"
                )
        return c * self.lambda_multiplier(s)

    def gradient(self, c):
        c = self.check_spectral(c)
        return np.stack([1j * k * c for k in self.kd])

    def divergence(self, cv):
        cv = self.check_spectral(cv, vector=True)
        return sum(1j * k * cv[i] for i, k in enumerate(self.kd))

    def laplacian(self, c):
        return -self.k2 * self.check_spectral(c)

    def dealias(self, c):
        """Zero every mode with some ``|signed index| > N_i / 3``."""
        return c * self.dealias_mask

    def product(self, *fields):
        """Dealiased coefficients of the pointwise product of physical fields."""
        out = fields[0]
        for f in fields[1:]:
            out = out * f
        return self.fwd(out) * self.dealias_mask


def make_grid(dim, sizes, lengths):
    return Grid(dim, sizes, lengths)


def random_field(grid, rng, band=None, zero_mean=True, ncomp=None):
    """Seeded real random field, band-limited to ``|signed index| <= band``.

    Coefficients are unit-variance complex Gaussians (Hermitian symmetry is
    enforced by the inverse transform).  ``band`` defaults to ``N_i / 4``.
    """
    shape = ((ncomp,) if ncomp else ()) + grid.spectral_shape
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for axis, n in enumerate(grid.sizes):
        limit = n / 4 if band is None else band
        m = np.abs(grid.signed_indices[axis])
        if axis == grid.dim - 1:
            m = m[: n // 2 + 1]
        view = [1] * grid.dim
        view[axis] = m.size
        keep = keep & (m.reshape(view) <= limit)
    c = c * keep
    if zero_mean:
        c[(...,) + (0,) * grid.dim] = 0.0
    return grid.inv(c)
