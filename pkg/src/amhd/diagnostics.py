"""
Diagnostic functionals of an MHD state and their time series.

Spectral quantities are Parseval sums over the rfft half layout, with
``||f||^2 = (2 pi)^2 sum_k |c(k)|^2``.  Lebesgue norms and maxima come from
the grid samples (trapezoid rule, i.e. the grid mean times (2 pi)^2).  Grid
maxima are lower bounds of the true supremum.

Besides the named functionals each record carries the dissipation rates
that close the two balance laws

    d/dt (E_u + E_b)              = -eta * dissipation
    d/dt 1/2 ||(omega, j)||^2     = -eta * dissipation_grad + I,   I = int Q j

For the partial-directional mode ``dissipation == H_b`` and
``dissipation_grad == Hgrad_b``; the other modes use their own symbols, and
the mollifier (if any) enters squared.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .dynamics import MHDState, PhysParams, _b_symbols, _j_symbol, mollifier_symbol
from .spectral import AREA, Grid

__all__ = [
    "DiagConfig",
    "DiagRecord",
    "record",
    "record_half",
    "fill_energy_residuals",
    "energy_law_residual",
    "h1_law_residual",
    "interpolation_margin",
    "write_csv",
    "csv_columns",
]


@dataclass(frozen=True)
class DiagConfig:
    """Which optional functionals to compute.

    Attributes:
        sobolev: exponents s of the reported ``||(u, b)||_{H^s}``.
        lq: exponents q of the Lebesgue norms (``math.inf`` for the max).
        physical: compute grid-space quantities (maxima, L^q, div b, I).
    """

    sobolev: tuple[float, ...] = (1.0, 2.0)
    lq: tuple[float, ...] = (2.0, 4.0, math.inf)
    physical: bool = True


@dataclass
class DiagRecord:
    t: float
    E_u: float = 0.0
    E_b: float = 0.0
    H_b: float = 0.0
    Hgrad_b: float = 0.0
    enstrophy: float = 0.0
    current: float = 0.0
    sobolev: dict = field(default_factory=dict)
    lq_norms: dict = field(default_factory=dict)
    max_u: float = 0.0
    max_b: float = 0.0
    div_b: float = 0.0
    energy_residual: float = float("nan")
    dissipation: float = 0.0
    dissipation_grad: float = 0.0
    I: float = 0.0
    max_omega: float = 0.0
    grad_j_max: float = 0.0

    @property
    def energy(self) -> float:
        return self.E_u + self.E_b

    @property
    def h1(self) -> float:
        """1/2 ||(omega, j)||^2."""
        return self.enstrophy + self.current

    def row(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                out.update(v)
            else:
                out[f.name] = v
        return out


def _qname(q: float) -> str:
    return "inf" if math.isinf(q) else f"{q:g}"


def _lq(f: np.ndarray, q: float) -> float:
    """L^q norm of grid samples on the torus (trapezoid rule)."""
    a = np.abs(f)
    if math.isinf(q):
        return float(a.max())
    return float((AREA * np.mean(a**q)) ** (1.0 / q))


@lru_cache(maxsize=16)
def _weights(grid: Grid, params: PhysParams):
    h = grid.half
    k1, k2, ksq = h.k1, h.k2, h.ksq
    two_b = 2.0 * params.beta
    a2 = np.abs(k2) ** two_b
    a1 = np.abs(k1) ** two_b
    m2 = mollifier_symbol(params.epsilon, ksq) ** 2 if params.epsilon > 0 else 1.0
    s1, s2 = _b_symbols(params, k1, k2)
    sj = _j_symbol(params, k1, k2)
    return a1, a2, a2 * ksq, a1 * ksq, s1 * m2 / params.eta, s2 * m2 / params.eta, sj * m2 / params.eta


def half_fields(state: MHDState) -> np.ndarray:
    """(u1, u2, b1, b2, omega, j) of `state` on the half layout."""
    h = state.grid.half
    x = np.stack([h.from_full(f.coeffs) for f in state.fields])
    return fields_from_half(h, state.formulation, x)


def fields_from_half(h, formulation: str, x: np.ndarray) -> np.ndarray:
    out = np.empty((6,) + h.shape, dtype=complex)
    if formulation == "primitive":
        out[0:4] = x
        out[4] = h.ik1 * x[1] - h.ik2 * x[0]
        out[5] = h.ik1 * x[3] - h.ik2 * x[2]
    else:
        for i, c in enumerate(x):
            c = c.copy()
            c[0, 0] = 0.0
            out[2 * i] = h.ik2 * h.inv_ksq * c
            out[2 * i + 1] = -h.ik1 * h.inv_ksq * c
        out[4:6] = x
    return out


def record(state: MHDState, params: PhysParams, config: DiagConfig = DiagConfig()) -> DiagRecord:
    """All configured functionals of `state`.

    Raises:
        FloatingPointError: the state holds non-finite coefficients.
    """
    if not state.is_finite():
        raise FloatingPointError(f"non-finite state at t={state.t}")
    return record_half(state.grid, float(state.t), half_fields(state), params, config)


def record_half(grid: Grid, t: float, f: np.ndarray, params: PhysParams, config: DiagConfig) -> DiagRecord:
    """`record` on half-layout fields ``(u1, u2, b1, b2, omega, j)``."""
    if not np.all(np.isfinite(f)):
        raise FloatingPointError(f"non-finite state at t={t}")
    h = grid.half
    u, b, w, j = f[0:2], f[2:4], f[4], f[5]
    a1, a2, g2, g1, d1, d2, dj = _weights(grid, params)

    sq = h.sq_norm
    rec = DiagRecord(t=float(t))
    rec.E_u = 0.5 * (sq(u[0]) + sq(u[1]))
    rec.E_b = 0.5 * (sq(b[0]) + sq(b[1]))
    rec.enstrophy = 0.5 * sq(w)
    rec.current = 0.5 * sq(j)
    rec.H_b = sq(b[0], a2) + sq(b[1], a1)
    rec.Hgrad_b = sq(b[0], g2) + sq(b[1], g1)
    rec.dissipation = sq(b[0], d1) + sq(b[1], d2)
    rec.dissipation_grad = sq(j, dj)

    if config.sobolev:
        p2 = np.sum(f[0:4].real ** 2 + f[0:4].imag ** 2, axis=0)
        weight = 1.0 + h.ksq
        for s in config.sobolev:
            rec.sobolev[f"Hs_{s:g}"] = math.sqrt(sq(np.sqrt(p2), weight**s))

    if config.physical:
        ik1, ik2 = h.ik1, h.ik2
        stack = np.stack([
            u[0], u[1], b[0], b[1], w, j,
            ik1 * b[0], ik2 * b[0], ik1 * b[1], ik2 * b[1],
            ik1 * j, ik2 * j,
            ik1 * u[0], ik2 * u[0] + ik1 * u[1],
        ])
        low = not np.any(stack[..., h.kc:])
        p = h.to_phys_low(stack) if low else h.to_phys(stack)
        u1, u2, b1, b2, wp, jp, d1b1, d2b1, d1b2, d2b2, d1j, d2j, d1u1, su = p
        rec.max_u = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
        rec.max_b = float(np.sqrt(np.max(b1 * b1 + b2 * b2)))
        rec.max_omega = float(np.max(np.abs(wp)))
        rec.grad_j_max = float(np.sqrt(np.max(d1j * d1j + d2j * d2j)))
        rec.div_b = float(np.max(np.abs(d1b1 + d2b2)))
        # Q j with Q = 2 d1b1 (d2u1 + d1u2) - 2 d1u1 (d2b1 + d1b2)
        q = 2.0 * (d1b1 * su - d1u1 * (d2b1 + d1b2))
        rec.I = float(AREA * np.mean(q * jp))
        gb = np.sqrt(d1b1**2 + d2b1**2 + d1b2**2 + d2b2**2)
        for qexp in config.lq:
            name = _qname(qexp)
            rec.lq_norms[f"grad_b_L{name}"] = _lq(gb, qexp)
            rec.lq_norms[f"j_L{name}"] = _lq(jp, qexp)
            rec.lq_norms[f"omega_L{name}"] = _lq(wp, qexp)
    return rec


# ---------------------------------------------------------------------------
# balance laws


def _energy_balance(series: Sequence[DiagRecord], eta: float) -> np.ndarray:
    t = np.array([r.t for r in series])
    e = np.array([r.energy for r in series])
    d = np.array([r.dissipation for r in series])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (d[1:] + d[:-1]))])
    e0 = e[0]
    scale = 2.0 * e0 if e0 > 0 else 1.0
    return (2.0 * e + 2.0 * eta * integral - 2.0 * e0) / scale


def fill_energy_residuals(series: list[DiagRecord], eta: float) -> list[DiagRecord]:
    """Store the running energy-law residual in each record (in place)."""
    if series:
        res = _energy_balance(series, eta)
        for r, v in zip(series, res):
            r.energy_residual = float(v)
    return series


def energy_law_residual(series: Sequence[DiagRecord], eta: float) -> float:
    """max_t |2E(t) + 2 eta int_0^t D - 2E(0)| / (2E(0)), trapezoid in time.

    ``D`` is the record's dissipation rate, equal to H(b) for the partial
    system.  Falls back to an absolute residual when E(0) = 0.
    """
    if len(series) < 3:
        raise ValueError(f"energy_law_residual needs >= 3 records, got {len(series)}")
    return float(np.max(np.abs(_energy_balance(series, eta))))


def h1_law_residual(series: Sequence[DiagRecord], eta: float) -> float:
    """Residual of d/dt 1/2||(omega, j)||^2 + eta H(grad b) - I.

    The derivative is the fourth-order central difference on a uniform
    cadence, evaluated at interior records.  The result is relative to the
    largest of ``eta * dissipation_grad + |I|`` over the series (or of the
    functional itself when both vanish).

    Raises:
        ValueError: fewer than 5 records or a non-uniform cadence.
    """
    if len(series) < 5:
        raise ValueError(f"h1_law_residual needs >= 5 records, got {len(series)}")
    t = np.array([r.t for r in series])
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("h1_law_residual needs a uniform cadence")
    z = np.array([r.h1 for r in series])
    dz = (z[:-4] - 8.0 * z[1:-3] + 8.0 * z[3:-1] - z[4:]) / (12.0 * dt[0])
    d = np.array([r.dissipation_grad for r in series])[2:-2]
    i_ = np.array([r.I for r in series])[2:-2]
    res = dz + eta * d - i_
    rates = eta * np.array([r.dissipation_grad for r in series]) + np.abs([r.I for r in series])
    scale = float(np.max(rates))
    if scale == 0.0:
        scale = max(float(np.max(np.abs(z))), 1.0)
    return float(np.max(np.abs(res)) / scale)


def interpolation_margin(rec: DiagRecord, beta: float) -> float:
    """(2(beta-1)/beta)||b||^2 + (2/beta)H_b - ||j||^2, nonnegative for beta > 1."""
    if not beta > 1:
        raise ValueError("the j-vs-H(b) interpolation bound needs beta > 1")
    return 2.0 * (beta - 1.0) / beta * 2.0 * rec.E_b + 2.0 / beta * rec.H_b - 2.0 * rec.current


# ---------------------------------------------------------------------------
# CSV


def csv_columns(series: Sequence[DiagRecord]) -> list[str]:
    if not series:
        return [f.name for f in fields(DiagRecord) if f.name not in ("sobolev", "lq_norms")]
    return list(series[0].row())


def write_csv(
    series: Iterable[DiagRecord],
    out: TextIO,
    params: Optional[PhysParams] = None,
    n: Optional[int] = None,
    dt: Optional[float] = None,
) -> None:
    """One row per record, preceded by ``# key=value`` parameter-echo lines."""
    series = list(series)
    if params is not None:
        for key, val in (
            ("eta", params.eta),
            ("beta", params.beta),
            ("mode", params.mode),
            ("formulation", params.formulation),
            ("epsilon", params.epsilon),
        ):
            out.write(f"# {key}={val!r}\n" if isinstance(val, float) else f"# {key}={val}\n")
    if n is not None:
        out.write(f"# N={n}\n")
    if dt is not None:
        out.write(f"# dt={dt!r}\n")
    cols = csv_columns(series)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(cols)
    for r in series:
        row = r.row()
        writer.writerow([repr(float(row[c])) for c in cols])


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Parse CSV written by `write_csv` into (header echo, rows)."""
    meta = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif line.strip():
            lines.append(line)
    rows = [
        {k: float(v) for k, v in row.items()}
        for row in csv.DictReader(io.StringIO("\n".join(lines)))
    ]
    return meta, rows
