"""
Periodic grid, Fourier transforms and dealiasing on the torus [0, 2*pi)^2.

Coefficients follow the convention

    f(x) = sum_k c(k) exp(i k.x),    c(k) = (1 / (n1 n2)) sum_x f(x) exp(-i k.x)

so ``cos(x1)`` has ``c(+-1, 0) = 1/2`` and Parseval reads
``||f||_{L^2}^2 = (2 pi)^2 sum_k |c(k)|^2``.

`SpectralField` stores the full complex coefficient array indexed in FFT
order, axis 0 = k1 and axis 1 = k2.  The time stepper and the right-hand
sides work on the half (rfft) layout through `HalfSpectrum` for speed;
both layouts describe the same real field.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi
AREA = TWO_PI**2

__all__ = [
    "AREA",
    "Grid",
    "HalfSpectrum",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "dealias",
    "pointwise_product",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n1 x n2`` points on [0, 2*pi)^2."""

    n1: int
    n2: int

    def __post_init__(self):
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n!r}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))

    @classmethod
    def square(cls, n: int) -> "Grid":
        return cls(n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def dx(self) -> float:
        """Smallest grid spacing, used by the CFL bound."""
        return TWO_PI / max(self.n1, self.n2)

    @cached_property
    def k1(self) -> np.ndarray:
        """Integer wavenumbers in x1 as a column, values in [-n1/2, n1/2 - 1]."""
        return np.fft.fftfreq(self.n1, 1.0 / self.n1)[:, None]

    @cached_property
    def k2(self) -> np.ndarray:
        return np.fft.fftfreq(self.n2, 1.0 / self.n2)[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule: |k1| <= n1/3 and |k2| <= n2/3."""
        return (np.abs(self.k1) <= self.n1 / 3) & (np.abs(self.k2) <= self.n2 / 3)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """False on the k1 = -n1/2 row and the k2 = -n2/2 column."""
        return (self.k1 != -self.n1 // 2) & (self.k2 != -self.n2 // 2)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = TWO_PI * np.arange(self.n1) / self.n1
        x2 = TWO_PI * np.arange(self.n2) / self.n2
        return np.meshgrid(x1, x2, indexing="ij")

    @cached_property
    def half(self) -> "HalfSpectrum":
        return HalfSpectrum(self)


class HalfSpectrum:
    """rfft layout of a grid: the k2 >= 0 half of the coefficient array.

    Only used internally by the hot loops.  Derivative symbols vanish on the
    Nyquist row/column so that odd multipliers keep fields real.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        n1, n2 = grid.shape
        self.n2h = n2 // 2 + 1
        self.shape = (n1, self.n2h)
        self.k1 = np.fft.fftfreq(n1, 1.0 / n1)[:, None]
        # sign of the Nyquist column is irrelevant: every symbol we use is
        # even in k2 there or zeroed
        self.k2 = np.arange(self.n2h, dtype=float)[None, :]
        self.ksq = self.k1**2 + self.k2**2
        self.inv_ksq = np.zeros(self.shape)
        np.divide(1.0, self.ksq, out=self.inv_ksq, where=self.ksq > 0)
        self.ik1 = 1j * np.where(self.k1 == -(n1 // 2), 0.0, self.k1)
        self.ik2 = 1j * np.where(self.k2 == n2 // 2, 0.0, self.k2)
        self.mask = (np.abs(self.k1) <= n1 / 3) & (self.k2 <= n2 / 3)
        # columns that can hold dealiased content
        self.kc = n2 // 3 + 1
        # multiplicity of each stored mode in the full spectrum
        w = np.full(self.n2h, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.weights = np.broadcast_to(w[None, :], self.shape)
        self._neg1 = (-np.arange(n1)) % n1
        self._pad: dict[tuple, np.ndarray] = {}

    def to_phys(self, c: np.ndarray) -> np.ndarray:
        """Inverse transform of (a stack of) half-layout coefficients."""
        return sfft.irfft2(c, s=self.grid.shape, norm="forward")

    def to_spec(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfft2(f, norm="forward")

    def to_phys_low(self, c: np.ndarray) -> np.ndarray:
        """Inverse transform of coefficients given on the first `kc` columns only.

        The remaining columns are taken as zero, which skips a third of the
        column transforms for dealiased data.  Same values as `to_phys`.
        """
        kc = self.kc
        shape = c.shape[:-1] + (self.n2h,)
        tmp = self._pad.get(shape)
        if tmp is None:
            # columns >= kc are never written, so the buffer can be reused
            tmp = self._pad[shape] = np.zeros(shape, dtype=complex)
        tmp[..., :kc] = sfft.ifft(c[..., :kc], axis=-2, norm="forward")
        return sfft.irfft(tmp, n=self.grid.n2, axis=-1, norm="forward")

    def to_spec_low(self, f: np.ndarray) -> np.ndarray:
        """Dealiased forward transform, returned on the first `kc` columns."""
        tmp = sfft.rfft(f, axis=-1, norm="forward")[..., : self.kc]
        out = sfft.fft(tmp, axis=-2, norm="forward")
        out *= self.mask[:, : self.kc]
        return out

    def from_full(self, c: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(c[..., : self.n2h])

    def to_full(self, c: np.ndarray) -> np.ndarray:
        n2 = self.grid.n2
        out = np.empty(c.shape[:-1] + (n2,), dtype=complex)
        out[..., : self.n2h] = c
        cols = np.arange(self.n2h, n2)
        # c(k1, -k2) = conj(c(-k1, k2))
        out[..., cols] = np.conj(c[..., self._neg1, :][..., n2 - cols])
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """(2 pi)^2 Re sum_k a(k) conj(b(k)) over the full spectrum."""
        return AREA * float(np.sum(self.weights * (a * np.conj(b)).real))

    def sq_norm(self, a: np.ndarray, weight: np.ndarray | float = 1.0) -> float:
        """(2 pi)^2 sum_k weight(k) |a(k)|^2 over the full spectrum."""
        return AREA * float(np.sum(self.weights * weight * (a.real**2 + a.imag**2)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A real scalar field on `grid` held as full complex Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient array has shape {self.coeffs.shape}, grid is {self.grid.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, samples: np.ndarray) -> "SpectralField":
        return forward_transform(samples, grid)

    def physical(self) -> np.ndarray:
        return inverse_transform(self)

    def l2_norm(self) -> float:
        return float(np.sqrt(AREA * np.sum(np.abs(self.coeffs) ** 2)))

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def forward_transform(samples: np.ndarray, grid: Grid) -> SpectralField:
    """Exact discrete Fourier coefficients of real samples on `grid`."""
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"samples have shape {samples.shape}, grid is {grid.shape}")
    if np.iscomplexobj(samples):
        raise ValueError("physical samples must be real")
    return SpectralField(grid, sfft.fft2(samples, norm="forward"))


def inverse_transform(f: SpectralField, tol: float = 1e-13) -> np.ndarray:
    """Real physical samples of `f`.

    Raises ValueError when the imaginary residue exceeds ``tol * max|f|``,
    which means the coefficients are not conjugate symmetric.
    """
    z = sfft.ifft2(f.coeffs, norm="forward")
    scale = float(np.max(np.abs(z.real))) if z.size else 0.0
    resid = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if resid > tol * max(scale, np.finfo(float).tiny):
        raise ValueError(
            f"conjugate symmetry violated: imaginary residue {resid:.3e} vs max|f| {scale:.3e}"
        )
    return np.ascontiguousarray(z.real)


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with |k1| > n1/3 or |k2| > n2/3."""
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def pointwise_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased pseudo-spectral product f*g."""
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    fg = inverse_transform(f) * inverse_transform(g)
    return dealias(forward_transform(fg, f.grid))
