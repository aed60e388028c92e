"""Named initial conditions.  All presets are zero-mean and dealiased."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import MHDState
from .spectral import Grid, SpectralField, dealias

__all__ = ["PRESETS", "InitialSpec", "make_initial", "random_divfree", "curl_state"]

PRESETS = ("orszag-tang-like", "taylor-green", "random-divfree", "single-mode", "snapshot")


@dataclass(frozen=True)
class InitialSpec:
    """Initial condition description.

    Attributes:
        preset: one of `PRESETS`.
        seed: RNG seed for ``random-divfree``.
        component: field carrying the ``single-mode`` excitation
            (``u1, u2, b1, b2, omega, j``).
        mode: wavevector (k1, k2) of ``single-mode``.
        amplitude: peak amplitude of ``single-mode``, overall scale otherwise.
        path: snapshot file for ``snapshot``.
    """

    preset: str = "orszag-tang-like"
    seed: int = 0
    component: str = "b1"
    mode: tuple[int, int] = (3, 2)
    amplitude: float = 1.0
    path: Optional[str] = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if self.preset == "snapshot" and not self.path:
            raise ValueError("snapshot preset needs a path")


def curl_state(grid: Grid, omega: np.ndarray, j: np.ndarray, formulation: str) -> MHDState:
    w = dealias(SpectralField.from_physical(grid, omega))
    c = dealias(SpectralField.from_physical(grid, j))
    for f in (w, c):
        f.coeffs[0, 0] = 0.0
    return MHDState.vorticity_current(w, c).as_formulation(formulation)


def _random_curl(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Real random scalar whose Biot-Savart field has coefficients ~ |k|^-3."""
    noise = SpectralField.from_physical(grid, rng.standard_normal(grid.shape))
    ksq = grid.ksq
    keep = (ksq > 0) & (ksq <= (min(grid.shape) / 4.0) ** 2) & grid.dealias_mask
    filt = np.zeros(grid.shape)
    filt[keep] = ksq[keep] ** -1.0
    c = noise.coeffs * filt
    return SpectralField(grid, c).physical()


def random_divfree(grid: Grid, seed: int, formulation: str = "vorticity-current", scale: float = 1.0) -> MHDState:
    """Seeded random divergence-free (u, b), each normalized to ``||.||_{L^2} = scale``."""
    rng = np.random.default_rng(seed)
    w = _random_curl(grid, rng)
    j = _random_curl(grid, rng)
    st = curl_state(grid, w, j, "vorticity-current")
    u = st.velocity()
    b = st.magnetic()
    nu = np.hypot(u[0].l2_norm(), u[1].l2_norm())
    nb = np.hypot(b[0].l2_norm(), b[1].l2_norm())
    st = MHDState.vorticity_current(st.fields[0] * (scale / nu), st.fields[1] * (scale / nb))
    return st.as_formulation(formulation)


def make_initial(spec: InitialSpec | str, grid: Grid, formulation: str = "vorticity-current") -> MHDState:
    """Build the initial state for `spec` on `grid` in `formulation`.

    Presets:
        orszag-tang-like: ``omega = 2 cos x1 cos x2``, ``j = 0.5 Laplacian(cos 2x1 cos x2)``.
        taylor-green: same vorticity, ``b = 0``.
        random-divfree: seeded, see `random_divfree`.
        single-mode: ``amplitude * cos(k.x)`` in one component.
        snapshot: fields read from a snapshot file (grid must match).
    """
    if isinstance(spec, str):
        spec = InitialSpec(preset=spec)
    x1, x2 = grid.coordinates
    a = spec.amplitude
    if spec.preset in ("orszag-tang-like", "taylor-green"):
        w = 2.0 * a * np.cos(x1) * np.cos(x2)
        if spec.preset == "taylor-green":
            j = np.zeros(grid.shape)
        else:
            j = -0.5 * 5.0 * a * np.cos(2 * x1) * np.cos(x2)
        return curl_state(grid, w, j, formulation)
    if spec.preset == "random-divfree":
        return random_divfree(grid, spec.seed, formulation, scale=a)
    if spec.preset == "single-mode":
        names = ("u1", "u2", "b1", "b2") if formulation == "primitive" else ("omega", "j")
        if spec.component not in names:
            raise ValueError(f"component {spec.component!r} not in {formulation} state {names}")
        k1, k2 = spec.mode
        if (k1, k2) == (0, 0):
            raise ValueError("single-mode needs a nonzero wavevector")
        fields = []
        for name in names:
            f = a * np.cos(k1 * x1 + k2 * x2) if name == spec.component else np.zeros(grid.shape)
            fields.append(SpectralField.from_physical(grid, f))
        if not np.all(grid.dealias_mask[k1 % grid.n1, k2 % grid.n2]):
            raise ValueError(f"mode {spec.mode} is removed by dealiasing on {grid}")
        # exact two-coefficient representation
        for f in fields:
            c = f.coeffs
            c[np.abs(c) < 1e-14 * max(abs(a), 1.0)] = 0.0
        return MHDState(formulation, tuple(fields))
    from .snapshot import read_snapshot

    snap = read_snapshot(spec.path)
    if (snap.n1, snap.n2) != grid.shape:
        raise ValueError(f"snapshot grid {(snap.n1, snap.n2)} does not match {grid.shape}")
    return snap.to_state().as_formulation(formulation)
