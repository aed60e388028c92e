"""
Fourier multipliers: directional and isotropic fractional Laplacians,
partial derivatives, Leray projection, curl and Biot-Savart inversion.

All operators are diagonal in k and act exactly on the coefficients; none of
them dealias.  Fractional symbols are set to 0 at k = 0.  Derivative symbols
are set to 0 on the Nyquist row/column, where ``i k`` would break conjugate
symmetry of a real field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import Grid, SpectralField

__all__ = [
    "MultiplierSpec",
    "directional",
    "isotropic",
    "derivative",
    "custom",
    "apply_multiplier",
    "leray_project",
    "curl2d",
    "divergence",
    "gradient",
    "biot_savart",
]

KINDS = ("directional-1", "directional-2", "isotropic", "derivative-1", "derivative-2", "custom")


@dataclass(frozen=True)
class MultiplierSpec:
    """Symbol of a diagonal Fourier operator.

    ``directional-1``: ``scale*|k1|^exponent``; ``directional-2``: ``scale*|k2|^exponent``;
    ``isotropic``: ``scale*|k|^exponent``; ``derivative-j``: ``scale*i*k_j``;
    ``custom``: ``scale*symbol(k1, k2)``.
    """

    kind: str
    exponent: float = 0.0
    symbol: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if self.exponent < 0:
            raise ValueError(f"exponent must be >= 0, got {self.exponent}")
        if self.kind == "custom" and self.symbol is None:
            raise ValueError("custom multiplier needs a symbol")

    def evaluate(self, k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
        k1, k2 = np.broadcast_arrays(np.asarray(k1, float), np.asarray(k2, float))
        if self.kind == "custom":
            return self.scale * np.asarray(self.symbol(k1, k2))
        if self.kind.startswith("derivative"):
            k = k1 if self.kind == "derivative-1" else k2
            return self.scale * 1j * k
        if self.kind == "directional-1":
            base = np.abs(k1)
        elif self.kind == "directional-2":
            base = np.abs(k2)
        else:
            base = np.sqrt(k1**2 + k2**2)
        out = base**self.exponent
        return self.scale * np.where((k1 == 0) & (k2 == 0), 0.0, out)

    def on_grid(self, grid: Grid) -> np.ndarray:
        s = np.broadcast_to(self.evaluate(grid.k1, grid.k2), grid.shape)
        if self.kind.startswith("derivative"):
            s = s * grid.nyquist_free
        return s


def directional(axis: int, gamma: float, scale: float = 1.0) -> MultiplierSpec:
    """Lambda_axis^gamma, symbol |k_axis|^gamma."""
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    return MultiplierSpec(f"directional-{axis}", gamma, scale=scale)


def isotropic(gamma: float, scale: float = 1.0) -> MultiplierSpec:
    """Lambda^gamma = (-Laplacian)^(gamma/2)."""
    return MultiplierSpec("isotropic", gamma, scale=scale)


def derivative(axis: int) -> MultiplierSpec:
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    return MultiplierSpec(f"derivative-{axis}")


def custom(symbol: Callable[[np.ndarray, np.ndarray], np.ndarray], scale: float = 1.0) -> MultiplierSpec:
    return MultiplierSpec("custom", symbol=symbol, scale=scale)


def apply_multiplier(spec: MultiplierSpec, f: SpectralField) -> SpectralField:
    sym = spec.on_grid(f.grid)
    if not np.all(np.isfinite(sym)):
        bad = np.argwhere(~np.isfinite(sym))[0]
        raise ValueError(f"multiplier symbol is not finite at mode index {tuple(bad)}")
    return SpectralField(f.grid, sym * f.coeffs)


def _same_grid(*fields: SpectralField) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


def _ik(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    nyq = grid.nyquist_free
    return 1j * grid.k1 * nyq, 1j * grid.k2 * nyq


def leray_project(v1: SpectralField, v2: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Orthogonal projection onto divergence-free fields; k = 0 passes through.

    Written as ``k_perp (k_perp . v) / |k|^2`` so the output divergence cancels
    to round-off mode by mode.
    """
    grid = _same_grid(v1, v2)
    k1, k2, ksq = grid.k1, grid.k2, grid.ksq
    inv = np.zeros(grid.shape)
    np.divide(1.0, ksq, out=inv, where=ksq > 0)
    s = (-k2 * v1.coeffs + k1 * v2.coeffs) * inv
    p1 = -k2 * s
    p2 = k1 * s
    p1[0, 0] = v1.coeffs[0, 0]
    p2[0, 0] = v2.coeffs[0, 0]
    return SpectralField(grid, p1), SpectralField(grid, p2)


def curl2d(v1: SpectralField, v2: SpectralField) -> SpectralField:
    """Scalar curl d1 v2 - d2 v1."""
    grid = _same_grid(v1, v2)
    ik1, ik2 = _ik(grid)
    return SpectralField(grid, ik1 * v2.coeffs - ik2 * v1.coeffs)


def divergence(v1: SpectralField, v2: SpectralField) -> SpectralField:
    grid = _same_grid(v1, v2)
    ik1, ik2 = _ik(grid)
    return SpectralField(grid, ik1 * v1.coeffs + ik2 * v2.coeffs)


def gradient(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    ik1, ik2 = _ik(f.grid)
    return SpectralField(f.grid, ik1 * f.coeffs), SpectralField(f.grid, ik2 * f.coeffs)


def biot_savart(w: SpectralField, tol: float = 1e-13) -> tuple[SpectralField, SpectralField]:
    """Divergence-free field with scalar curl `w`: v = grad_perp (Laplacian^{-1} w).

    Coefficients: ``v1 = i k2 w / |k|^2``, ``v2 = -i k1 w / |k|^2``; the mean of
    v is zero.  Nyquist modes of `w` are not recovered by ``curl2d``.
    """
    grid = w.grid
    c = w.coeffs
    if abs(c[0, 0]) > tol * max(1.0, float(np.max(np.abs(c)))):
        raise ValueError(f"Biot-Savart needs a zero-mean field, mean mode is {c[0, 0]:.3e}")
    ik1, ik2 = _ik(grid)
    inv = np.zeros(grid.shape)
    np.divide(1.0, grid.ksq, out=inv, where=grid.ksq > 0)
    return SpectralField(grid, ik2 * c * inv), SpectralField(grid, -ik1 * c * inv)
