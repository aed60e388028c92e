"""
Experiment runner and command line.

``amhd KIND [--config PATH] [--set key=value ...] [--out DIR] [--seed N] [--threads N]``

Every run directory receives ``manifest.json`` (canonical config text,
library version, wall time, status).  Exit codes: 0 success, 1 a
verification check failed, 2 configuration error, 3 NaN abort (partial
diagnostics are still written), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy
import scipy.fft

from . import __version__
from . import diagnostics, duhamel, kernels, multipliers
from .config import KINDS, ConfigError, RunConfig, format_config, parse_config
from .dynamics import BlowupError
from .initial import make_initial, random_divfree
from .snapshot import Snapshot, write_snapshot
from .spectral import Grid
from .timestepper import integrate

__all__ = [
    "EXIT_OK",
    "EXIT_CHECK_FAILED",
    "EXIT_CONFIG",
    "EXIT_NAN",
    "EXIT_IO",
    "run",
    "simulate",
    "kernel_suite",
    "multiplier_suite",
    "duhamel_check",
    "sweep",
    "main",
]

log = logging.getLogger("amhd")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NAN = 3
EXIT_IO = 4


class _Failed(Exception):
    """A verification suite ran to completion but a check did not pass."""


# ---------------------------------------------------------------------------
# experiments; each writes into `out` and returns a summary dict


def simulate(cfg: RunConfig, out: Path) -> dict:
    """Integrate the configured system; writes diagnostics.csv and final.snap."""
    grid, params = cfg.grid, cfg.params
    state0 = make_initial(cfg.initial, grid, params.formulation)
    csv_path = out / "diagnostics.csv"
    cadence = cfg.values["diagnostics"]["cadence"]
    try:
        res = integrate(state0, params, cfg.step, sample_every=cadence, diag=cfg.diag)
    except BlowupError as exc:
        with open(csv_path, "w", newline="") as fh:
            diagnostics.write_csv(getattr(exc, "records", []), fh, params, grid.n1, cfg.step.dt)
        raise
    with open(csv_path, "w", newline="") as fh:
        diagnostics.write_csv(res.records, fh, params, grid.n1, cfg.step.dt)
    write_snapshot(out / "final.snap", Snapshot.from_state(res.state, params))
    last = res.records[-1]
    summary = {
        "steps": res.steps,
        "t_final": res.state.t,
        "records": len(res.records),
        "cfl_violations": res.cfl_violations,
        "energy_final": last.energy,
    }
    if len(res.records) >= 3:
        summary["energy_residual_max"] = diagnostics.energy_law_residual(res.records, params.eta)
    print(f"simulate: {res.steps} steps to t={res.state.t:.6g}, E={last.energy:.12g}")
    return summary


def kernel_suite(cfg: RunConfig, out: Path) -> dict:
    """Norm-vs-t tables and exponent fits for the configured (beta, m, sigma) matrix.

    Writes kernel_norms.csv (one line per beta, t, m, sigma, r) and
    kernel_exponents.csv (fitted against expected slope per beta, m, sigma, r).
    """
    k = cfg.values["kernel"]
    lo, hi = k["log2_t"]
    ts = [2.0**e for e in range(lo, hi + 1)]
    tol = k["tolerance"]
    table = []
    fits = []
    for beta in k["betas"]:
        for m in k["ms"]:
            for sigma in k["sigmas"]:
                rows = [kernels.kernel_norms(beta, m, sigma, t) for t in ts]
                table.extend(rows)
                for r in (1.0, 2.0, math.inf):
                    slope = kernels.fit_exponent(ts, [row[r] for row in rows])
                    want = kernels.expected_exponent(beta, m, sigma, r)
                    dev = abs(slope - want) / abs(want) if want else abs(slope)
                    ok = dev <= tol if want else dev <= 1e-6
                    fits.append((beta, m, sigma, r, slope, want, dev, ok))
    with open(out / "kernel_norms.csv", "w", newline="") as fh:
        kernels.write_csv(table, fh)
    with open(out / "kernel_exponents.csv", "w") as fh:
        fh.write("beta,m,sigma,r,fitted,expected,deviation,pass\n")
        for beta, m, sigma, r, slope, want, dev, ok in fits:
            rr = "inf" if math.isinf(r) else repr(r)
            fh.write(f"{beta!r},{m},{sigma!r},{rr},{slope!r},{want!r},{dev!r},{int(ok)}\n")
    n_ok = sum(f[-1] for f in fits)
    print(f"kernel-suite: {n_ok}/{len(fits)} exponent fits within tolerance")
    summary = {"fits": len(fits), "passed": n_ok, "worst_deviation": max(f[6] for f in fits)}
    if n_ok != len(fits):
        raise _Failed(summary)
    return summary


def _shell_deviation(rows: Sequence[multipliers.HMRow]) -> dict[int, float]:
    dev = {}
    for k in (0, 1, 2):
        sups = [r.sup_resolved for r in rows if r.k == k and math.isfinite(r.sup_resolved)]
        ref = sups[0]
        dev[k] = max(abs(s / ref - 1.0) for s in sups) if ref > 0 else max(sups)
    return dev


def multiplier_suite(cfg: RunConfig, out: Path) -> dict:
    """Young bound, shell table, mixed-derivative identity and L^q ratios per sigma.

    Writes young.csv, hm.csv, mixed.csv and lq.csv.
    """
    mcfg = cfg.values["multiplier"]
    grid = Grid.square(mcfg["n"])
    young, hm_rows, mixed, lq = [], [], [], []
    ok = True
    for sigma in mcfg["sigmas"]:
        y = multipliers.symbol_young_check(sigma)
        young.append(y)
        rows = multipliers.hm_condition_check(multipliers.HMSymbol(sigma))
        hm_rows.extend(rows)
        dev = _shell_deviation(rows)
        st = random_divfree(grid, cfg.seed, "primitive")
        rep = multipliers.mixed_derivative_reconstruct(st.fields[2], st.fields[3], sigma)
        mixed.append((sigma, rep))
        ratios = multipliers.lq_ratio_study(sigma, grid, n_fields=mcfg["fields"], seed=cfg.seed)
        lq.extend((sigma, q, r) for q, r in ratios.items())
        passed = (
            y.max_symbol <= 1.0 and y.normalized <= 1e-14 and max(dev.values()) <= 1e-3 and rep.residual <= 1e-11
        )
        ok &= passed
        print(
            f"multiplier-suite sigma={sigma:g}: max m={y.max_symbol:.6f} young={y.normalized:.2e} "
            f"shell_dev={max(dev.values()):.2e} mixed={rep.residual:.2e} {'PASS' if passed else 'FAIL'}"
        )
    with open(out / "young.csv", "w") as fh:
        fh.write("sigma,raw_violation,normalized_violation,max_symbol\n")
        for y in young:
            fh.write(f"{y.sigma!r},{y.raw!r},{y.normalized!r},{y.max_symbol!r}\n")
    with open(out / "hm.csv", "w", newline="") as fh:
        multipliers.write_hm_csv(hm_rows, fh)
    with open(out / "mixed.csv", "w") as fh:
        fh.write("sigma,residual,ratio,plus_sign_residual\n")
        for sigma, rep in mixed:
            fh.write(f"{sigma!r},{rep.residual!r},{rep.ratio!r},{rep.plus_sign_residual!r}\n")
    with open(out / "lq.csv", "w", newline="") as fh:
        multipliers.write_lq_csv(lq, fh)
    summary = {"sigmas": list(mcfg["sigmas"]), "passed": bool(ok)}
    if not ok:
        raise _Failed(summary)
    return summary


def duhamel_check(cfg: RunConfig, out: Path) -> dict:
    """Duhamel reconstruction of b at the configured cadence and two halvings.

    Writes duhamel.csv; fails when the error at the base cadence exceeds the
    threshold.
    """
    d = cfg.values["duhamel"]
    grid = Grid.square(d["n"])
    params = cfg.params.with_(formulation=d["formulation"])
    state0 = make_initial(cfg.initial, grid, params.formulation)
    base = d["cadence"]
    # record at the finest cadence that is still a whole number of steps
    strides = [4, 2, 1]
    while strides and abs(round(base / strides[0] / d["dt"]) * d["dt"] - base / strides[0]) > 1e-9 * base:
        strides.pop(0)
    if not strides:
        raise ConfigError(f"duhamel.cadence {base} is not a multiple of duhamel.dt {d['dt']}")
    fine = strides[0]
    hist, _ = duhamel.record_history(state0, params, d["dt"], d["t_end"], base / fine)
    rows = []
    for s in strides:
        res = duhamel.duhamel_reconstruct(hist.subsample(s))
        rows.append((base * s / fine, res.error_b1, res.error_b2))
    shift = duhamel.structure_shift_check(hist)
    with open(out / "duhamel.csv", "w") as fh:
        fh.write("cadence,error_b1,error_b2\n")
        for c, e1, e2 in rows:
            fh.write(f"{c!r},{e1!r},{e2!r}\n")
    err = max(rows[0][1], rows[0][2])
    passed = err <= d["threshold"]
    for c, e1, e2 in rows:
        print(f"duhamel-check cadence={c:g}: error b1={e1:.3e} b2={e2:.3e}")
    print(f"duhamel-check structure-shift gap={shift:.3e}")
    print(f"duhamel-check error={err:.3e} threshold={d['threshold']:g} {'PASS' if passed else 'FAIL'}")
    summary = {
        "errors": [{"cadence": c, "b1": e1, "b2": e2} for c, e1, e2 in rows],
        "structure_shift_gap": shift,
        "error": err,
        "passed": passed,
    }
    if len(rows) == 3:
        summary["shrink"] = err / max(rows[-1][1], rows[-1][2], 1e-300)
    if not passed:
        raise _Failed(summary)
    return summary


def _point_name(i: int, point) -> str:
    parts = [f"{name.split('.')[-1]}={val}" for name, val in point]
    return f"{i:03d}_" + "_".join(parts).replace("/", "-")


def sweep(cfg: RunConfig, out: Path) -> dict:
    """Run the cartesian product of ``[sweep]`` lists, one subdirectory each."""
    kind = cfg.values["sweep"]["kind"]
    workers = cfg.values["sweep"]["workers"]
    subs = []
    for i, point in enumerate(cfg.sweep_points()):
        sub_dir = out / _point_name(i, point)
        sub = cfg.with_overrides(list(point) + [("run.kind", kind), ("run.out", str(sub_dir))])
        subs.append(replace(sub, sweep={}))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(run, subs))
    else:
        codes = [run(s) for s in subs]
    runs = [{"dir": Path(s.out).name, "exit_code": c} for s, c in zip(subs, codes)]
    print(f"sweep: {len(subs)} runs, exit codes {codes}")
    summary = {"runs": runs}
    worst = max(codes) if codes else 0
    if worst:
        summary["worst_exit_code"] = worst
        raise _SweepFailed(summary, worst)
    return summary


class _SweepFailed(Exception):
    def __init__(self, summary, code):
        super().__init__(summary)
        self.summary = summary
        self.code = code


_EXPERIMENTS = {
    "simulate": simulate,
    "kernel-suite": kernel_suite,
    "multiplier-suite": multiplier_suite,
    "duhamel-check": duhamel_check,
    "sweep": sweep,
}


# ---------------------------------------------------------------------------
# driver


def _manifest(cfg: RunConfig, status: str, code: int, wall: float, summary: Optional[dict], error: str = "") -> dict:
    return {
        "kind": cfg.kind,
        "status": status,
        "exit_code": code,
        "error": error,
        "wall_time_s": wall,
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "config": format_config(cfg),
        "summary": summary,
    }


def run(cfg: RunConfig) -> int:
    """Execute the experiment named by ``cfg.kind``; returns the exit code."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_IO
    t0 = time.perf_counter()
    summary, status, code, err = None, "ok", EXIT_OK, ""
    try:
        with scipy.fft.set_workers(cfg.threads):
            summary = _EXPERIMENTS[cfg.kind](cfg, out)
    except BlowupError as exc:
        status, code, err = "nan-abort", EXIT_NAN, str(exc)
    except _SweepFailed as exc:
        status, code, summary = "failed", exc.code, exc.summary
    except _Failed as exc:
        status, code, summary = "check-failed", EXIT_CHECK_FAILED, exc.args[0]
    except ConfigError as exc:
        status, code, err = "config-error", EXIT_CONFIG, str(exc)
    except OSError as exc:
        status, code, err = "io-error", EXIT_IO, str(exc)
    except ValueError as exc:
        # invalid combinations only detectable at set-up (grid too small for a mode, ...)
        status, code, err = "config-error", EXIT_CONFIG, str(exc)
    wall = time.perf_counter() - t0
    if err:
        log.error("%s: %s", status, err)
    try:
        with open(out / "manifest.json", "w") as fh:
            json.dump(_manifest(cfg, status, code, wall, summary, err), fh, indent=2, default=_json_default)
            fh.write("\n")
    except OSError as exc:
        log.error("cannot write manifest: %s", exc)
        return code or EXIT_IO
    return code


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amhd", description="Anisotropic fractional MHD simulator and verification suites.")
    sub = p.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", metavar="PATH", help="configuration file")
        sp.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override a key (section.key or bare key); repeatable")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--seed", type=int, metavar="N", help="random seed")
        sp.add_argument("--threads", type=int, metavar="N", help="FFT worker threads")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Config file, then ``--set`` pairs, then the dedicated flags."""
    text = Path(args.config).read_text() if args.config else ""
    cfg = parse_config(text)
    pairs = []
    for item in args.sets:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs.append((key.strip(), val.strip()))
    pairs.append(("run.kind", args.kind))
    if args.out is not None:
        pairs.append(("run.out", args.out))
    if args.seed is not None:
        pairs.append(("run.seed", str(args.seed)))
    if args.threads is not None:
        pairs.append(("run.threads", str(args.threads)))
    return cfg.with_overrides(pairs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
