"""
Right-hand sides of the 2D MHD systems with inviscid velocity.

Velocity: ``u_t = P(-u.grad u + b.grad b)``, pressure removed by the Leray
projection P.  Magnetic field, per component ``i``:

    b_i,t = -u.grad b_i + b.grad u_i - D_i b_i

with the diffusion ``D_i`` chosen by ``PhysParams.mode``:

* ``partial-directional``: ``D_1 = eta*Lambda_2^(2 beta)``, ``D_2 = eta*Lambda_1^(2 beta)``
* ``full-fractional``:     ``D_1 = D_2 = eta*Lambda^(2 beta)``
* ``classical-laplacian``: ``D_1 = D_2 = -eta*Laplacian``

The vorticity-current form evolves ``w = curl u`` and ``j = curl b``:

    w_t = -u.grad w + b.grad j
    j_t = -u.grad j + b.grad w + Q(u, b) - curl(D b)
    Q(u, b) = 2 d1b1 (d2u1 + d1u2) - 2 d1u1 (d2b1 + d1b2)

with u, b recovered by Biot-Savart.  For divergence-free b the partial
diffusion acts on j diagonally with symbol
``eta (|k1|^(2 beta) k1^2 + |k2|^(2 beta) k2^2) / |k|^2``.

The primitive form does not project b, so partial diffusion creates
divergence (see `divergence_production`).  With ``epsilon > 0`` every
nonlinear term becomes ``J(Jf . grad Jg)`` and diffusion ``J^2 D`` with the
mollifier symbol ``J = exp(-epsilon^2 |k|^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import operators as ops
from .spectral import Grid, HalfSpectrum, SpectralField, pointwise_product

__all__ = [
    "MODES",
    "FORMULATIONS",
    "BlowupError",
    "PhysParams",
    "MHDState",
    "SpectralSystem",
    "diffusion_symbol",
    "current_diffusion_symbol",
    "mollifier_symbol",
    "mollify",
    "rhs_primitive",
    "rhs_vorticity_current",
    "rhs",
    "q_term",
    "structure_identity_residual",
    "divergence_production",
]

MODES = ("partial-directional", "full-fractional", "classical-laplacian")
FORMULATIONS = ("primitive", "vorticity-current")
COMPONENTS = {
    "primitive": ("u1", "u2", "b1", "b2"),
    "vorticity-current": ("omega", "j"),
}


class BlowupError(FloatingPointError):
    """A non-finite coefficient appeared; the run cannot continue."""


@dataclass(frozen=True)
class PhysParams:
    eta: float = 0.1
    beta: float = 1.5
    mode: str = "partial-directional"
    formulation: str = "vorticity-current"
    epsilon: float = 0.0
    nonlinear: bool = True

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta > 0 required, got eta={self.eta}")
        if not self.beta > 0:
            raise ValueError(f"beta > 0 required, got beta={self.beta}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon >= 0 required, got epsilon={self.epsilon}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")

    @property
    def global_regularity_regime(self) -> bool:
        """True for beta > 1, where global regularity is proved for the partial system."""
        return self.beta > 1

    def with_(self, **changes) -> "PhysParams":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class MHDState:
    """Evolved fields plus time.

    ``fields`` is ``(u1, u2, b1, b2)`` for the primitive formulation and
    ``(omega, j)`` for the vorticity-current one.
    """

    formulation: str
    fields: tuple[SpectralField, ...]
    t: float = 0.0

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        expected = len(COMPONENTS[self.formulation])
        if len(self.fields) != expected:
            raise ValueError(f"{self.formulation} state needs {expected} fields, got {len(self.fields)}")
        grid = self.fields[0].grid
        if any(f.grid != grid for f in self.fields):
            raise ValueError("all state fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    @property
    def names(self) -> tuple[str, ...]:
        return COMPONENTS[self.formulation]

    @classmethod
    def primitive(cls, u1, u2, b1, b2, t: float = 0.0) -> "MHDState":
        return cls("primitive", (u1, u2, b1, b2), t)

    @classmethod
    def vorticity_current(cls, omega, j, t: float = 0.0) -> "MHDState":
        return cls("vorticity-current", (omega, j), t)

    def velocity(self) -> tuple[SpectralField, SpectralField]:
        if self.formulation == "primitive":
            return self.fields[0], self.fields[1]
        return ops.biot_savart(_zero_mean(self.fields[0]))

    def magnetic(self) -> tuple[SpectralField, SpectralField]:
        if self.formulation == "primitive":
            return self.fields[2], self.fields[3]
        return ops.biot_savart(_zero_mean(self.fields[1]))

    def vorticity(self) -> SpectralField:
        if self.formulation == "vorticity-current":
            return self.fields[0]
        return ops.curl2d(*self.velocity())

    def current(self) -> SpectralField:
        if self.formulation == "vorticity-current":
            return self.fields[1]
        return ops.curl2d(*self.magnetic())

    def as_formulation(self, formulation: str) -> "MHDState":
        if formulation == self.formulation:
            return self
        if formulation == "vorticity-current":
            return MHDState.vorticity_current(self.vorticity(), self.current(), self.t)
        return MHDState.primitive(*self.velocity(), *self.magnetic(), t=self.t)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(f.coeffs)) for f in self.fields)


def _zero_mean(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[0, 0] = 0.0
    return SpectralField(f.grid, c)


# ---------------------------------------------------------------------------
# symbols


def _b_symbols(params: PhysParams, k1, k2) -> tuple[np.ndarray, np.ndarray]:
    """Diffusion rates of b1 and b2 (eta included), zero at k = 0."""
    two_b = 2.0 * params.beta
    ksq = k1**2 + k2**2
    if params.mode == "partial-directional":
        s1 = params.eta * np.abs(k2) ** two_b
        s2 = params.eta * np.abs(k1) ** two_b
    elif params.mode == "full-fractional":
        s1 = s2 = params.eta * ksq**params.beta
    else:
        s1 = s2 = params.eta * ksq
    zero = (k1 == 0) & (k2 == 0)
    return np.where(zero, 0.0, s1), np.where(zero, 0.0, s2)


def _j_symbol(params: PhysParams, k1, k2) -> np.ndarray:
    if params.mode != "partial-directional":
        return _b_symbols(params, k1, k2)[0]
    two_b = 2.0 * params.beta
    ksq = k1**2 + k2**2
    num = np.abs(k1) ** two_b * k1**2 + np.abs(k2) ** two_b * k2**2
    out = np.zeros(np.broadcast(k1, k2).shape)
    np.divide(params.eta * num, ksq, out=out, where=ksq > 0)
    return out


def diffusion_symbol(params: PhysParams, component: str) -> ops.MultiplierSpec:
    """Multiplier of the magnetic diffusion acting on ``b1``, ``b2`` or ``b-iso``."""
    eta, two_b = params.eta, 2.0 * params.beta
    if component not in ("b1", "b2", "b-iso"):
        raise ValueError(f"component must be b1, b2 or b-iso, got {component!r}")
    if params.mode == "partial-directional":
        if component == "b-iso":
            raise ValueError("partial-directional diffusion has no isotropic symbol")
        return ops.directional(2 if component == "b1" else 1, two_b, scale=eta)
    if params.mode == "full-fractional":
        return ops.isotropic(two_b, scale=eta)
    return ops.isotropic(2.0, scale=eta)


def current_diffusion_symbol(params: PhysParams) -> ops.MultiplierSpec:
    """Diagonal symbol of the diffusion term in the j-equation."""
    return ops.custom(lambda k1, k2: _j_symbol(params, k1, k2))


def mollifier_symbol(epsilon: float, ksq) -> np.ndarray:
    """Fourier symbol of the mollifier: exp(-epsilon^2 |k|^2), equal to 1 at k = 0."""
    return np.exp(-(epsilon**2) * np.asarray(ksq))


def mollify(f: SpectralField, epsilon: float) -> SpectralField:
    if epsilon < 0:
        raise ValueError(f"epsilon >= 0 required, got {epsilon}")
    if epsilon == 0:
        return f
    return SpectralField(f.grid, f.coeffs * mollifier_symbol(epsilon, f.grid.ksq))


# ---------------------------------------------------------------------------
# fast assembly on the half spectrum


class SpectralSystem:
    """Linear symbols and nonlinear terms of one formulation on the rfft layout.

    ``linear`` has one row per evolved component; the full right-hand side is
    ``nonlinear(X) - linear * X``.  Nonlinear increments are dealiased and
    their mean modes pinned to zero.
    """

    def __init__(self, grid: Grid, params: PhysParams):
        self.grid = grid
        self.params = params
        self.h: HalfSpectrum = grid.half
        h = self.h
        self.moll = mollifier_symbol(params.epsilon, h.ksq) if params.epsilon > 0 else None
        m2 = 1.0 if self.moll is None else self.moll**2
        s1, s2 = _b_symbols(params, h.k1, h.k2)
        if params.formulation == "primitive":
            zero = np.zeros(h.shape)
            self.linear = np.stack([zero, zero, s1 * m2, s2 * m2])
        else:
            sj = _j_symbol(params, h.k1, h.k2)
            self.linear = np.stack([np.zeros(h.shape), sj * m2])
        self.ncomp = self.linear.shape[0]
        self._build_ops()

    # packing -----------------------------------------------------------
    def pack(self, state: MHDState) -> np.ndarray:
        if state.formulation != self.params.formulation:
            raise ValueError(
                f"state is {state.formulation}, system expects {self.params.formulation}"
            )
        if state.grid != self.grid:
            raise ValueError(f"state grid {state.grid} does not match {self.grid}")
        return np.stack([self.h.from_full(f.coeffs) for f in state.fields])

    def unpack(self, x: np.ndarray, t: float) -> MHDState:
        full = self.h.to_full(x)
        fields = tuple(SpectralField(self.grid, c) for c in full)
        return MHDState(self.params.formulation, fields, t)

    # terms -------------------------------------------------------------
    def _ops(self, low: bool):
        """Symbols and transforms for full-width or low-column arrays."""
        return self._low if low else self._full

    def _build_ops(self):
        h = self.h
        kc = h.kc
        moll = self.moll

        def finish_full(phys):
            out = h.to_spec(phys)
            out *= h.mask
            return out

        self._full = _Ops(h.k1, h.k2, h.ik1, h.ik2, h.inv_ksq, moll, h.to_phys, finish_full)
        self._low = _Ops(
            h.k1, h.k2[:, :kc], h.ik1, h.ik2[:, :kc], h.inv_ksq[:, :kc],
            None if moll is None else moll[:, :kc], h.to_phys_low, h.to_spec_low,
        )

    def _dispatch(self, kernel, x: np.ndarray) -> np.ndarray:
        kc = self.h.kc
        low = not np.any(x[..., kc:])
        o = self._ops(low)
        y = x[..., :kc] if low else x
        if o.moll is not None:
            y = y * o.moll
        out = kernel(o, y)
        if o.moll is not None:
            out *= o.moll
        out[..., 0, 0] = 0.0
        if low:
            full = np.zeros(out.shape[:-1] + (self.h.n2h,), dtype=complex)
            full[..., :kc] = out
            out = full
        return out

    def biot_savart(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = self.h
        return h.ik2 * w * h.inv_ksq, -h.ik1 * w * h.inv_ksq

    def leray(self, v1, v2):
        h = self.h
        s = (-h.k2 * v1 + h.k1 * v2) * h.inv_ksq
        p1, p2 = -h.k2 * s, h.k1 * s
        return p1, p2

    def nonlinear(self, x: np.ndarray) -> np.ndarray:
        if not self.params.nonlinear:
            return np.zeros_like(x)
        if self.params.formulation == "primitive":
            return self._dispatch(_nonlinear_primitive, x)
        return self._dispatch(_nonlinear_vc, x)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        out = self.nonlinear(x) - self.linear * x
        if not np.all(np.isfinite(out)):
            raise BlowupError("non-finite coefficient in right-hand side")
        return out

    def primitive_fields(self, x: np.ndarray) -> np.ndarray:
        """(u1, u2, b1, b2) on the half layout, unmollified."""
        if self.params.formulation == "primitive":
            return x
        return np.stack([*self.biot_savart(x[0]), *self.biot_savart(x[1])])

    def induction_terms(self, x: np.ndarray) -> np.ndarray:
        """Forcing of the b-equations and the fluxes behind their curl form.

        Returns ``[N1, N2, F1, F2]`` with ``N_i = b.grad u_i - u.grad b_i``,
        ``F1 = b2 u1 - u2 b1`` and ``F2 = b1 u2 - u1 b2`` (so that
        ``N1 = d2 F1`` and ``N2 = d1 F2`` when u and b are divergence-free).
        Dealiased, mollified like the evolved terms, mean modes zeroed.
        All four vanish when the nonlinear terms are switched off.
        """
        if not self.params.nonlinear:
            return np.zeros((4,) + x.shape[1:], dtype=complex)
        return self._dispatch(_induction, self.primitive_fields(x))


class _Ops:
    __slots__ = ("k1", "k2", "ik1", "ik2", "inv_ksq", "moll", "to_phys", "to_spec")

    def __init__(self, k1, k2, ik1, ik2, inv_ksq, moll, to_phys, to_spec):
        self.k1, self.k2, self.ik1, self.ik2 = k1, k2, ik1, ik2
        self.inv_ksq, self.moll = inv_ksq, moll
        self.to_phys, self.to_spec = to_phys, to_spec


def _nonlinear_primitive(o: _Ops, y: np.ndarray) -> np.ndarray:
    p = o.to_phys(np.concatenate([y, o.ik1 * y, o.ik2 * y]))
    u1, u2, b1, b2 = p[0:4]
    d1, d2 = p[4:8], p[8:12]
    ugrad = u1 * d1 + u2 * d2
    bgrad = b1 * d1 + b2 * d2
    nl = np.empty_like(ugrad)
    nl[0:2] = bgrad[2:4] - ugrad[0:2]
    nl[2:4] = bgrad[0:2] - ugrad[2:4]
    out = o.to_spec(nl)
    # Leray projection of the velocity increment
    s = (-o.k2 * out[0] + o.k1 * out[1]) * o.inv_ksq
    out[0] = -o.k2 * s
    out[1] = o.k1 * s
    return out


def _nonlinear_vc(o: _Ops, y: np.ndarray) -> np.ndarray:
    w, j = y
    ik1, ik2 = o.ik1, o.ik2
    buf = np.empty((12,) + w.shape, dtype=complex)
    np.multiply(ik2 * o.inv_ksq, w, out=buf[0])
    np.multiply(-ik1 * o.inv_ksq, w, out=buf[1])
    np.multiply(ik2 * o.inv_ksq, j, out=buf[2])
    np.multiply(-ik1 * o.inv_ksq, j, out=buf[3])
    np.multiply(ik1, w, out=buf[4])
    np.multiply(ik2, w, out=buf[5])
    np.multiply(ik1, j, out=buf[6])
    np.multiply(ik2, j, out=buf[7])
    np.multiply(ik1, buf[2], out=buf[8])
    np.multiply(ik1, buf[0], out=buf[9])
    buf[10] = ik2 * buf[0] + ik1 * buf[1]
    buf[11] = ik2 * buf[2] + ik1 * buf[3]
    u1, u2, b1, b2, w1, w2, j1, j2, d1b1, d1u1, su, sb = o.to_phys(buf)
    nl = np.empty((2,) + u1.shape)
    nl[0] = b1 * j1 + b2 * j2 - u1 * w1 - u2 * w2
    nl[1] = b1 * w1 + b2 * w2 - u1 * j1 - u2 * j2 + 2.0 * (d1b1 * su - d1u1 * sb)
    return o.to_spec(nl)


def _induction(o: _Ops, y: np.ndarray) -> np.ndarray:
    p = o.to_phys(np.concatenate([y, o.ik1 * y, o.ik2 * y]))
    u1, u2, b1, b2 = p[0:4]
    d1, d2 = p[4:8], p[8:12]
    out = np.empty((4,) + u1.shape)
    out[0:2] = b1 * d1[0:2] + b2 * d2[0:2] - (u1 * d1[2:4] + u2 * d2[2:4])
    out[2] = b2 * u1 - u2 * b1
    out[3] = b1 * u2 - u1 * b2
    return o.to_spec(out)


# ---------------------------------------------------------------------------
# public right-hand sides


def rhs(state: MHDState, params: PhysParams) -> MHDState:
    """Time derivative of `state` under `params` (dispatch on formulation)."""
    system = SpectralSystem(state.grid, params)
    x = system.pack(state)
    if not np.all(np.isfinite(x)):
        raise BlowupError("non-finite coefficient in state")
    return system.unpack(system.rhs(x), state.t)


def rhs_primitive(state: MHDState, params: PhysParams) -> MHDState:
    if state.formulation != "primitive" or params.formulation != "primitive":
        raise ValueError("rhs_primitive needs a primitive state and primitive params")
    return rhs(state, params)


def rhs_vorticity_current(state: MHDState, params: PhysParams) -> MHDState:
    if state.formulation != "vorticity-current" or params.formulation != "vorticity-current":
        raise ValueError("rhs_vorticity_current needs a vorticity-current state and params")
    for f in state.fields:
        if abs(f.coeffs[0, 0]) > 1e-13 * max(1.0, float(np.max(np.abs(f.coeffs)))):
            raise ValueError("omega and j must have zero mean")
    return rhs(state, params)


# ---------------------------------------------------------------------------
# structure checks


def q_term(u: Sequence[SpectralField], b: Sequence[SpectralField]) -> SpectralField:
    """Q(u, b) = 2 d1b1 (d2u1 + d1u2) - 2 d1u1 (d2b1 + d1b2), dealiased."""
    d = ops.derivative
    a = ops.apply_multiplier
    d1b1 = a(d(1), b[0])
    d1u1 = a(d(1), u[0])
    su = a(d(2), u[0]) + a(d(1), u[1])
    sb = a(d(2), b[0]) + a(d(1), b[1])
    return 2.0 * (pointwise_product(d1b1, su) - pointwise_product(d1u1, sb))


def _advect(a: Sequence[SpectralField], f: SpectralField) -> SpectralField:
    g1, g2 = ops.gradient(f)
    return pointwise_product(a[0], g1) + pointwise_product(a[1], g2)


def structure_identity_residual(
    u: Sequence[SpectralField], b: Sequence[SpectralField], component: int = 1
) -> float:
    """Max-norm of ``(b.grad u_i - u.grad b_i) - d_m(flux)``.

    Component 1 uses ``d2(b2 u1 - u2 b1)``, component 2 ``d1(b1 u2 - u1 b2)``.
    Both sides are assembled independently from dealiased products; the
    residual vanishes when div u = div b = 0.
    """
    if component == 1:
        lhs = _advect(b, u[0]) - _advect(u, b[0])
        flux = pointwise_product(b[1], u[0]) - pointwise_product(u[1], b[0])
        rhs_ = ops.apply_multiplier(ops.derivative(2), flux)
    elif component == 2:
        lhs = _advect(b, u[1]) - _advect(u, b[1])
        flux = pointwise_product(b[0], u[1]) - pointwise_product(u[0], b[1])
        rhs_ = ops.apply_multiplier(ops.derivative(1), flux)
    else:
        raise ValueError(f"component must be 1 or 2, got {component}")
    return float(np.max(np.abs((lhs - rhs_).physical())))


def divergence_production(b: Sequence[SpectralField], params: PhysParams) -> SpectralField:
    """Rate at which magnetic diffusion creates div b: ``-div(D b)``.

    For the partial system this is ``-eta (Lambda_2^(2 beta) d1 b1 + Lambda_1^(2 beta) d2 b2)``,
    which is nonzero on generic divergence-free fields.  The isotropic modes
    commute with div and give zero on divergence-free b.
    """
    grid = b[0].grid
    s1, s2 = _b_symbols(params, grid.k1, grid.k2)
    if params.epsilon > 0:
        m2 = mollifier_symbol(params.epsilon, grid.ksq) ** 2
        s1, s2 = s1 * m2, s2 * m2
    db1 = SpectralField(grid, s1 * b[0].coeffs)
    db2 = SpectralField(grid, s2 * b[1].coeffs)
    return -ops.divergence(db1, db2)
