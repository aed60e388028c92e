"""
Duhamel (mild-solution) reconstruction of the magnetic field on the torus.

Each retained Fourier mode of ``b_i`` satisfies the scalar ODE

    d/dt b_i(k) = N_i(k, t) - lam_i(k) b_i(k),   N_i = b.grad u_i - u.grad b_i

so that

    b_i(k, t) = exp(-lam_i t) b_i(k, 0) + int_0^t exp(-lam_i (t - s)) N_i(k, s) ds.

For the primitive partial-directional system ``lam_1 = eta |k2|^(2 beta)``
and ``lam_2 = eta |k1|^(2 beta)``, the lattice form of convolution with the
1D kernels in x2 and x1.  In the vorticity-current formulation both
components decay with the current symbol.

The history is sampled at a uniform cadence during the run, and the time
integral is evaluated per mode by composite Simpson quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .dynamics import MHDState, PhysParams
from .timestepper import Stepper

__all__ = [
    "DuhamelHistory",
    "DuhamelResult",
    "record_history",
    "duhamel_integral",
    "duhamel_reconstruct",
    "structure_shift_check",
]

MIN_SAMPLES = 9


@dataclass
class DuhamelHistory:
    """Dense per-mode history of one run, retained modes of the half layout only.

    Attributes:
        times: uniform sample times, starting at 0 (relative to the run start).
        k1, k2: wavenumbers of the stored modes.
        weight: multiplicity of each stored mode in the full spectrum.
        lam: decay symbol of b1 and b2, shape (2, M).
        b0, b_final: b1 and b2 at the first and last sample, shape (2, M).
        forcing: N1, N2 per sample, shape (S, 2, M).
        flux: F1 = b2 u1 - u2 b1 and F2 = b1 u2 - u1 b2, shape (S, 2, M).
    """

    params: PhysParams
    times: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    weight: np.ndarray
    lam: np.ndarray
    b0: np.ndarray
    b_final: np.ndarray
    forcing: np.ndarray
    flux: np.ndarray

    @property
    def cadence(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def subsample(self, stride: int) -> "DuhamelHistory":
        """History at `stride` times the cadence; the last sample must be kept."""
        if (len(self.times) - 1) % stride:
            raise ValueError(f"stride {stride} does not divide {len(self.times) - 1} intervals")
        sl = slice(None, None, stride)
        return replace(self, times=self.times[sl], forcing=self.forcing[sl], flux=self.flux[sl])


@dataclass(frozen=True)
class DuhamelResult:
    """Relative L^2 discrepancies of the reconstructed b1, b2 and the fields themselves."""

    error_b1: float
    error_b2: float
    reconstructed: np.ndarray

    @property
    def error(self) -> float:
        return max(self.error_b1, self.error_b2)


def record_history(
    state0: MHDState, params: PhysParams, dt: float, t_end: float, cadence: float
) -> tuple[DuhamelHistory, MHDState]:
    """Integrate and record the b-forcing every `cadence` time units.

    `cadence` must be an integer multiple of `dt`, and `t_end` a multiple of
    `cadence`.  Returns the history and the final state.
    """
    stride = int(round(cadence / dt))
    nsamp = int(round(t_end / cadence))
    if stride < 1 or abs(stride * dt - cadence) > 1e-9 * cadence:
        raise ValueError(f"cadence {cadence} is not a multiple of dt {dt}")
    if nsamp < 1 or abs(nsamp * cadence - t_end) > 1e-9 * t_end:
        raise ValueError(f"t_end {t_end} is not a multiple of the cadence {cadence}")
    stepper = Stepper(state0.grid, params)
    system = stepper.system
    h = system.h
    sel = h.mask.copy()
    sel[0, 0] = False
    rows, cols = np.nonzero(sel)

    if params.formulation == "primitive":
        lam = np.stack([system.linear[2][rows, cols], system.linear[3][rows, cols]])
    else:
        lj = system.linear[1][rows, cols]
        lam = np.stack([lj, lj])

    x = system.pack(state0)
    forcing = np.empty((nsamp + 1, 2, rows.size), dtype=complex)
    flux = np.empty_like(forcing)

    def sample(i, x):
        terms = system.induction_terms(x)
        forcing[i] = terms[0:2][:, rows, cols]
        flux[i] = terms[2:4][:, rows, cols]
        return system.primitive_fields(x)[2:4][:, rows, cols]

    b0 = sample(0, x)
    for i in range(1, nsamp + 1):
        for _ in range(stride):
            x = stepper.advance(x, dt)
        b_final = sample(i, x)
    hist = DuhamelHistory(
        params=params,
        times=np.arange(nsamp + 1) * cadence,
        k1=h.k1[rows, 0],
        k2=h.k2[0, cols],
        weight=h.weights[rows, cols],
        lam=lam,
        b0=b0,
        b_final=b_final,
        forcing=forcing,
        flux=flux,
    )
    return hist, system.unpack(x, state0.t + nsamp * cadence)


def duhamel_integral(lam: np.ndarray, samples: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Composite Simpson value of int_0^T exp(-lam (T - s)) f(s) ds per mode.

    `samples` has the time axis first; `times` is uniform.

    Raises:
        ValueError: fewer than 9 samples.
    """
    if len(times) < MIN_SAMPLES:
        raise ValueError(f"history cadence too coarse: {len(times)} samples, need >= {MIN_SAMPLES}")
    lag = times[-1] - times
    shape = (len(times),) + (1,) * (samples.ndim - 1 - lam.ndim) + lam.shape
    kernel = np.exp(-lam[None] * lag.reshape((-1,) + (1,) * lam.ndim)).reshape(shape)
    return simpson(kernel * samples, dx=times[1] - times[0], axis=0)


def _rel(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    num = np.sum(w * np.abs(a - b) ** 2)
    den = np.sum(w * np.abs(b) ** 2)
    if den == 0.0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den))


def duhamel_reconstruct(history: DuhamelHistory) -> DuhamelResult:
    """Rebuild b1, b2 at the last sample from b0 and the forcing history.

    Returns relative L^2 discrepancies against the time-stepped field.
    """
    T = history.t_end
    rec = np.exp(-history.lam * T) * history.b0 + duhamel_integral(
        history.lam, history.forcing, history.times
    )
    w = history.weight
    e1 = _rel(rec[0], history.b_final[0], w)
    e2 = _rel(rec[1], history.b_final[1], w)
    return DuhamelResult(e1, e2, rec)


def structure_shift_check(history: DuhamelHistory) -> float:
    """Relative gap between two assemblies of d1 d2 b_i at the final time.

    (i) derivative moved onto the kernel::

        d1d2 b1 = (ik1)(ik2) S(t) b1(0) + int (ik2)^2 S(t - s) (ik1) F1(s) ds

    and the mirror ``(ik1)^2 ... (ik2) F2`` for b2; (ii) ``(ik1)(ik2)``
    applied to the Duhamel reconstruction of b_i from the forcing history.
    The two agree when ``N1 = d2 F1`` and ``N2 = d1 F2``, i.e. when u and b
    are divergence-free.  Returns the larger of the two relative gaps.
    """
    T = history.t_end
    ik1 = 1j * history.k1
    ik2 = 1j * history.k2
    lam = history.lam
    direct = duhamel_reconstruct(history).reconstructed * (ik1 * ik2)
    flux_int = duhamel_integral(lam, history.flux, history.times)
    shifted = np.exp(-lam * T) * history.b0 * (ik1 * ik2)
    shifted[0] += ik2**2 * ik1 * flux_int[0]
    shifted[1] += ik1**2 * ik2 * flux_int[1]
    w = history.weight
    return max(_rel(shifted[0], direct[0], w), _rel(shifted[1], direct[1], w))
