"""
Integrating-factor RK4 around the exact diffusion semigroup.

Each component evolves as ``x' = N(x) - L x`` with diagonal ``L``.  The
substitution ``v = exp(t L) x`` removes the stiff term, classical RK4 is
applied to ``v``, and the result is mapped back.  With ``N = 0`` a step is
exactly multiplication by ``exp(-dt L)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import operators as ops
from .diagnostics import DiagConfig, DiagRecord, fields_from_half, fill_energy_residuals, record_half
from .dynamics import (
    BlowupError,
    MHDState,
    PhysParams,
    SpectralSystem,
    _b_symbols,
    _j_symbol,
    mollifier_symbol,
)

log = logging.getLogger(__name__)

__all__ = [
    "StepConfig",
    "CFLWarning",
    "semigroup_factor",
    "ifrk4_step",
    "Stepper",
    "step",
    "integrate",
    "IntegrationResult",
]


class CFLWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class StepConfig:
    dt: float = 5e-4
    t_end: float = 1.0
    cfl_safety: float = 0.5
    adaptive: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt > 0 required, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end >= 0 required, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"0 < cfl_safety <= 1 required, got {self.cfl_safety}")


def semigroup_factor(params: PhysParams, component: str, dt: float) -> ops.MultiplierSpec:
    """exp(-dt * rate) for the linear rate of `component`.

    `component` is one of ``u1, u2, b1, b2, omega, j``; velocity and vorticity
    have no diffusion.  The mollifier, when active, enters as ``J^2``.
    """
    if dt < 0:
        raise ValueError(f"dt >= 0 required, got {dt}")

    def rate(k1, k2):
        if component in ("u1", "u2", "omega"):
            return np.zeros(np.broadcast(k1, k2).shape)
        if component == "j":
            r = _j_symbol(params, k1, k2)
        elif component in ("b1", "b2"):
            r = _b_symbols(params, k1, k2)[0 if component == "b1" else 1]
        else:
            raise ValueError(f"unknown component {component!r}")
        if params.epsilon > 0:
            r = r * mollifier_symbol(params.epsilon, k1**2 + k2**2) ** 2
        return r

    return ops.custom(lambda k1, k2: np.exp(-dt * rate(k1, k2)))


def ifrk4_step(
    x: np.ndarray,
    dt: float,
    linear: np.ndarray,
    nonlinear: Callable[[np.ndarray], np.ndarray],
    factors: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """One integrating-factor RK4 step of ``x' = nonlinear(x) - linear * x``.

    `factors` may carry precomputed ``(exp(-dt L / 2), exp(-dt L))``.
    Negative `dt` integrates backwards.
    """
    if factors is None:
        e2 = np.exp(-0.5 * dt * linear)
        e = np.exp(-dt * linear)
    else:
        e2, e = factors
    k1 = nonlinear(x)
    k2 = nonlinear(e2 * (x + 0.5 * dt * k1))
    k3 = nonlinear(e2 * x + 0.5 * dt * k2)
    k4 = nonlinear(e * x + dt * (e2 * k3))
    return e * x + (dt / 6.0) * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)


class Stepper:
    """IF-RK4 on the half spectrum for one (grid, params) pair."""

    def __init__(self, grid, params: PhysParams):
        self.system = SpectralSystem(grid, params)
        self.params = params
        self._factors: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def factors(self, dt: float):
        f = self._factors.get(dt)
        if f is None:
            L = self.system.linear
            f = (np.exp(-0.5 * dt * L), np.exp(-dt * L))
            if len(self._factors) > 8:
                self._factors.clear()
            self._factors[dt] = f
        return f

    def advance(self, x: np.ndarray, dt: float) -> np.ndarray:
        out = ifrk4_step(x, dt, self.system.linear, self.system.nonlinear, self.factors(dt))
        if not np.all(np.isfinite(out)):
            raise BlowupError("non-finite coefficient after time step")
        return out

    def max_speed(self, x: np.ndarray) -> float:
        """max over the grid of |u| + |b|."""
        h = self.system.h
        p = h.to_phys(self.system.primitive_fields(x))
        return float(np.max(np.hypot(p[0], p[1]) + np.hypot(p[2], p[3])))

    def cfl_dt(self, x: np.ndarray, safety: float) -> float:
        v = self.max_speed(x)
        return math.inf if v == 0 else safety * self.system.grid.dx / v


def step(state: MHDState, params: PhysParams, cfg: StepConfig) -> MHDState:
    """Advance `state` by one step of size ``cfg.dt`` (or less when adaptive).

    In fixed mode a CFL violation is reported with `CFLWarning`.
    """
    stepper = Stepper(state.grid, params)
    x = stepper.system.pack(state)
    dt = cfg.dt
    limit = stepper.cfl_dt(x, cfg.cfl_safety)
    if dt > limit:
        if cfg.adaptive:
            dt = limit
        else:
            warnings.warn(f"dt={dt:g} exceeds CFL limit {limit:.3g}", CFLWarning, stacklevel=2)
    return stepper.system.unpack(stepper.advance(x, dt), state.t + dt)


@dataclass
class IntegrationResult:
    state: MHDState
    records: list[DiagRecord] = field(default_factory=list)
    steps: int = 0
    cfl_violations: int = 0


Observer = Callable[[MHDState], None]


def integrate(
    state0: MHDState,
    params: PhysParams,
    cfg: StepConfig,
    observers: Iterable[Observer] = (),
    sample_every: int = 1,
    diag: Optional[DiagConfig] = DiagConfig(),
) -> IntegrationResult:
    """Step from ``state0.t`` to ``state0.t + cfg.t_end``.

    Observers and the diagnostic record are sampled at the start, every
    `sample_every` steps and at the end.  Observers must not mutate the
    state.  On a blow-up the raised `BlowupError` carries the partial
    ``records`` list.  Single-threaded runs are bit-reproducible.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    observers = list(observers)
    stepper = Stepper(state0.grid, params)
    system = stepper.system
    x = system.pack(state0)
    if not np.all(np.isfinite(x)):
        raise BlowupError("initial state is not finite")
    t0 = state0.t
    records: list[DiagRecord] = []
    result = IntegrationResult(state0, records)

    def sample(x, t):
        if observers:
            st = system.unpack(x, t)
            for obs in observers:
                obs(st)
        if diag is not None:
            f = fields_from_half(system.h, params.formulation, x)
            records.append(record_half(system.grid, t, f, params, diag))
        return t

    sample(x, t0)
    n_fixed = int(round(cfg.t_end / cfg.dt)) if not cfg.adaptive else 0
    elapsed = 0.0
    i = 0
    try:
        while True:
            remaining = cfg.t_end - elapsed
            if cfg.adaptive:
                if remaining <= 1e-12 * max(cfg.t_end, 1.0):
                    break
                dt = min(cfg.dt, stepper.cfl_dt(x, cfg.cfl_safety), remaining)
            else:
                if i < n_fixed:
                    dt = cfg.dt
                elif remaining > 1e-12 * max(cfg.t_end, 1.0):
                    dt = remaining
                else:
                    break
            x = stepper.advance(x, dt)
            i += 1
            elapsed = i * cfg.dt if (not cfg.adaptive and i <= n_fixed) else elapsed + dt
            at_end = cfg.t_end - elapsed <= 1e-12 * max(cfg.t_end, 1.0)
            if i % sample_every == 0 or at_end:
                if not cfg.adaptive and stepper.cfl_dt(x, cfg.cfl_safety) < cfg.dt:
                    result.cfl_violations += 1
                    log.warning("t=%.4g: dt=%g above CFL limit", t0 + elapsed, cfg.dt)
                sample(x, t0 + elapsed)
    except BlowupError as exc:
        exc.records = fill_energy_residuals(records, params.eta)
        raise
    if diag is not None:
        result.records = fill_energy_residuals(records, params.eta)
    # zero steps: hand back the caller's state untouched (bit-exact snapshot)
    result.state = state0 if i == 0 else system.unpack(x, t0 + elapsed)
    result.steps = i
    return result
