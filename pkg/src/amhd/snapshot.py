"""
Binary snapshot files.

Layout (little-endian): magic ``b"AMHD"``, format version u32, n1 u32,
n2 u32, time f64, beta f64, eta f64, mode u8, formulation u8, then one
row-major f64 physical-space array of n1*n2 values per state component in
declared order (u1, u2, b1, b2 or omega, j).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import FORMULATIONS, MODES, MHDState, PhysParams, COMPONENTS
from .spectral import Grid, SpectralField, dealias, inverse_transform

__all__ = ["MAGIC", "VERSION", "Snapshot", "write_snapshot", "read_snapshot", "SnapshotError"]

MAGIC = b"AMHD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdddBB")


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Snapshot:
    n1: int
    n2: int
    t: float
    beta: float
    eta: float
    mode: str
    formulation: str
    arrays: tuple[np.ndarray, ...]

    @classmethod
    def from_state(cls, state: MHDState, params: PhysParams) -> "Snapshot":
        arrays = tuple(inverse_transform(f, tol=1e-10) for f in state.fields)
        g = state.grid
        return cls(g.n1, g.n2, float(state.t), params.beta, params.eta, params.mode, state.formulation, arrays)

    def to_state(self) -> MHDState:
        """Spectral reconstruction of the stored fields, re-dealiased."""
        grid = Grid(self.n1, self.n2)
        fields = tuple(dealias(SpectralField.from_physical(grid, a)) for a in self.arrays)
        return MHDState(self.formulation, fields, self.t)

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(
            MAGIC, VERSION, self.n1, self.n2, self.t, self.beta, self.eta,
            MODES.index(self.mode), FORMULATIONS.index(self.formulation),
        )
        body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes(order="C") for a in self.arrays)
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "Snapshot":
        if len(data) < _HEADER.size:
            raise SnapshotError("file too short for a snapshot header")
        magic, version, n1, n2, t, beta, eta, mode, form = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotError(f"unsupported snapshot version {version}")
        if mode >= len(MODES) or form >= len(FORMULATIONS):
            raise SnapshotError("bad mode or formulation code")
        formulation = FORMULATIONS[form]
        ncomp = len(COMPONENTS[formulation])
        size = n1 * n2 * 8
        if len(data) != _HEADER.size + ncomp * size:
            raise SnapshotError(f"expected {ncomp} arrays of {n1}x{n2}, got {len(data) - _HEADER.size} bytes")
        arrays = tuple(
            np.frombuffer(data, dtype="<f8", count=n1 * n2, offset=_HEADER.size + i * size).reshape(n1, n2).astype(float)
            for i in range(ncomp)
        )
        return cls(n1, n2, t, beta, eta, MODES[mode], formulation, arrays)


def write_snapshot(path, snap: Snapshot) -> None:
    Path(path).write_bytes(snap.to_bytes())


def read_snapshot(path) -> Snapshot:
    return Snapshot.from_bytes(Path(path).read_bytes())
