"""
Run configuration.

Files are INI-style: ``[section]`` headers, one ``key = value`` per line,
``#`` comments.  Keys written before the first header (or given to
``--set`` without a section) are looked up in the simulation sections
``run, grid, physics, time, initial, diagnostics``, where every key name is
unique.  Unknown keys are rejected with their line number.

Example::

    beta = 1.25            # bare key, resolves to physics.beta

    [time]
    t_end = 2.0

    [sweep]
    physics.beta = 1.25, 1.5, 2
"""

from __future__ import annotations

import configparser
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional

from .diagnostics import DiagConfig
from .dynamics import FORMULATIONS, MODES, PhysParams
from .initial import PRESETS, InitialSpec
from .spectral import Grid
from .timestepper import StepConfig

__all__ = ["KINDS", "ConfigError", "RunConfig", "parse_config", "format_config", "SCHEMA"]

KINDS = ("simulate", "kernel-suite", "multiplier-suite", "duhamel-check", "sweep")
_TOP = "__top__"


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


# ---------------------------------------------------------------------------
# value types


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _float(s: str) -> float:
    v = s.strip().lower()
    if v in ("inf", "infinity"):
        return math.inf
    return float(v)


def _listof(conv):
    def parse(s: str) -> tuple:
        items = [p for p in re.split(r"[,\s]+", s.strip()) if p]
        return tuple(conv(p) for p in items)

    parse.__name__ = f"list[{conv.__name__}]"
    return parse


def _choice(options):
    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    parse.__name__ = "choice"
    return parse


def _optional_str(s: str) -> Optional[str]:
    v = s.strip()
    return v or None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    default: Any
    rule: Optional[Callable[[Any], bool]] = None
    rule_text: str = ""


def _k(parse, default, rule=None, rule_text=""):
    return _Key(parse, default, rule, rule_text)


_pos = lambda v: v > 0


SCHEMA: dict[str, dict[str, _Key]] = {
    "run": {
        "kind": _k(_choice(KINDS), "simulate"),
        "out": _k(str, "runs/default"),
        "seed": _k(int, 0, lambda v: v >= 0, "seed >= 0"),
        "threads": _k(int, 1, lambda v: v >= 1, "threads >= 1"),
    },
    "grid": {
        "n": _k(int, 128, lambda v: v >= 8 and v % 2 == 0, "n even and >= 8"),
        "n1": _k(int, 0, lambda v: v == 0 or (v >= 8 and v % 2 == 0), "n1 even and >= 8 (0 means n)"),
        "n2": _k(int, 0, lambda v: v == 0 or (v >= 8 and v % 2 == 0), "n2 even and >= 8 (0 means n)"),
    },
    "physics": {
        "eta": _k(_float, 0.1, _pos, "eta > 0"),
        "beta": _k(_float, 1.5, _pos, "beta > 0"),
        "mode": _k(_choice(MODES), "partial-directional"),
        "formulation": _k(_choice(FORMULATIONS), "vorticity-current"),
        "epsilon": _k(_float, 0.0, lambda v: v >= 0, "epsilon >= 0"),
        "nonlinear": _k(_bool, True),
    },
    "time": {
        "dt": _k(_float, 5e-4, _pos, "dt > 0"),
        "t_end": _k(_float, 1.0, lambda v: v >= 0 and math.isfinite(v), "t_end >= 0 and finite"),
        "cfl_safety": _k(_float, 0.5, lambda v: 0 < v <= 1, "0 < cfl_safety <= 1"),
        "adaptive": _k(_bool, False),
    },
    "initial": {
        "preset": _k(_choice(PRESETS), "orszag-tang-like"),
        "component": _k(_choice(("u1", "u2", "b1", "b2", "omega", "j")), "b1"),
        "mode_k": _k(_listof(int), (3, 2), lambda v: len(v) == 2 and v != (0, 0), "mode_k is a nonzero pair"),
        "amplitude": _k(_float, 1.0, lambda v: math.isfinite(v), "amplitude finite"),
        "snapshot": _k(_optional_str, None),
    },
    "diagnostics": {
        "cadence": _k(int, 10, lambda v: v >= 1, "cadence >= 1 step"),
        "sobolev": _k(_listof(_float), (1.0, 2.0), lambda v: all(s >= 0 for s in v), "sobolev exponents >= 0"),
        "lq": _k(_listof(_float), (2.0, 4.0, math.inf), lambda v: all(q >= 1 for q in v), "lq exponents >= 1"),
        "physical": _k(_bool, True),
    },
    "kernel": {
        "betas": _k(_listof(_float), (1.0, 1.25, 1.5, 2.0), lambda v: v and all(b >= 1 for b in v), "betas >= 1"),
        "ms": _k(_listof(int), (0, 1, 2), lambda v: v and all(m >= 0 for m in v), "ms >= 0"),
        "sigmas": _k(_listof(_float), (0.0, 0.5), lambda v: v and all(s >= 0 for s in v), "sigmas >= 0"),
        "log2_t": _k(_listof(int), (-4, 4), lambda v: len(v) == 2 and v[0] < v[1], "log2_t is an increasing pair"),
        "tolerance": _k(_float, 0.01, _pos, "tolerance > 0"),
    },
    "multiplier": {
        "sigmas": _k(_listof(_float), (0.25, 0.5, 1.0, 1.9), lambda v: v and all(s > 0 for s in v), "sigmas > 0"),
        "n": _k(int, 32, lambda v: v >= 8 and v % 2 == 0, "n even and >= 8"),
        "fields": _k(int, 50, lambda v: v >= 1, "fields >= 1"),
    },
    "duhamel": {
        "n": _k(int, 64, lambda v: v >= 8 and v % 2 == 0, "n even and >= 8"),
        "t_end": _k(_float, 0.5, _pos, "t_end > 0"),
        "dt": _k(_float, 2.5e-4, _pos, "dt > 0"),
        "cadence": _k(_float, 1e-3, _pos, "cadence > 0"),
        "formulation": _k(_choice(FORMULATIONS), "primitive"),
        "threshold": _k(_float, 1e-5, _pos, "threshold > 0"),
    },
    "sweep": {
        "kind": _k(_choice(tuple(k for k in KINDS if k != "sweep")), "simulate"),
        "workers": _k(int, 1, lambda v: v >= 1, "workers >= 1"),
    },
}

_BARE_SECTIONS = ("run", "grid", "physics", "time", "initial", "diagnostics")
_BARE = {key: sec for sec in _BARE_SECTIONS for key in SCHEMA[sec]}


def _resolve(name: str, lineno: Optional[int] = None) -> tuple[str, str]:
    """``section.key`` or a bare simulation key -> (section, key)."""
    name = name.strip().lower()
    if "." in name:
        sec, _, key = name.partition(".")
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError(f"unknown key {name!r}", lineno)
        return sec, key
    if name not in _BARE:
        raise ConfigError(f"unknown key {name!r}", lineno)
    return _BARE[name], name


def _convert(sec: str, key: str, raw: str, lineno: Optional[int] = None):
    spec = SCHEMA[sec][key]
    try:
        v = spec.parse(raw)
    except ValueError as exc:
        raise ConfigError(f"{sec}.{key}: {exc}", lineno) from None
    return v


def _check(sec: str, key: str, v, lineno: Optional[int] = None):
    spec = SCHEMA[sec][key]
    if spec.rule is not None and not spec.rule(v):
        raise ConfigError(f"{sec}.{key} = {_fmt(v)} violates constraint {spec.rule_text!r}", lineno)


# ---------------------------------------------------------------------------
# RunConfig


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values[section][key]`` holds typed values.

    ``sweep`` maps ``section.key`` to the list of values to iterate over.
    """

    values: Mapping[str, Mapping[str, Any]]
    sweep: Mapping[str, tuple] = field(default_factory=dict)

    def __getitem__(self, name: str):
        sec, key = _resolve(name)
        return self.values[sec][key]

    @property
    def kind(self) -> str:
        return self.values["run"]["kind"]

    @property
    def out(self) -> str:
        return self.values["run"]["out"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def threads(self) -> int:
        return self.values["run"]["threads"]

    @property
    def grid(self) -> Grid:
        g = self.values["grid"]
        return Grid(g["n1"] or g["n"], g["n2"] or g["n"])

    @property
    def params(self) -> PhysParams:
        return PhysParams(**self.values["physics"])

    @property
    def step(self) -> StepConfig:
        return StepConfig(**self.values["time"])

    @property
    def initial(self) -> InitialSpec:
        i = self.values["initial"]
        return InitialSpec(
            preset=i["preset"], seed=self.seed, component=i["component"],
            mode=tuple(i["mode_k"]), amplitude=i["amplitude"], path=i["snapshot"],
        )

    @property
    def diag(self) -> DiagConfig:
        d = self.values["diagnostics"]
        return DiagConfig(sobolev=d["sobolev"], lq=d["lq"], physical=d["physical"])

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def with_overrides(self, pairs: Iterable[tuple[str, Any]]) -> "RunConfig":
        """Copy with ``(name, value)`` overrides; string values are parsed."""
        vals = {s: dict(v) for s, v in self.values.items()}
        for name, v in pairs:
            sec, key = _resolve(name)
            if isinstance(v, str):
                v = _convert(sec, key, v)
            _check(sec, key, v)
            vals[sec][key] = v
        cfg = RunConfig(vals, dict(self.sweep))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Cross-key rules."""
        v = self.values
        if v["initial"]["preset"] == "snapshot" and not v["initial"]["snapshot"]:
            raise ConfigError("initial.preset = snapshot needs initial.snapshot (path)")
        if v["run"]["kind"] == "sweep" and not self.sweep:
            raise ConfigError("kind = sweep needs at least one list in [sweep]")
        try:
            self.params, self.step, self.initial, self.grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sweep_points(self) -> list[tuple[tuple[str, Any], ...]]:
        """Cartesian product of the sweep lists, as override tuples."""
        names = sorted(self.sweep)
        return [tuple(zip(names, combo)) for combo in itertools.product(*(self.sweep[n] for n in names))]


def _defaults() -> dict:
    return {sec: {k: spec.default for k, spec in keys.items()} for sec, keys in SCHEMA.items()}


def _locate(text: str) -> dict[tuple[str, str], int]:
    """Line number of each ``(section, raw key)`` in `text`."""
    where = {}
    sec = _TOP
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        m = re.match(r"\[\s*([^\]]+?)\s*\]", s)
        if m:
            sec = m.group(1).lower()
            continue
        key = s.partition("=")[0].strip().lower()
        where.setdefault((sec, key), i)
    return where


def _section_line(text: str, name: str) -> Optional[int]:
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[\s*([^\]]+?)\s*\]", line)
        if m and m.group(1).lower() == name:
            return i
    return None


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated `RunConfig` with defaults filled.

    Raises:
        ConfigError: syntax errors and unknown keys (with line number),
            type errors, and constraint violations naming the rule.
    """
    cp = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        strict=True,
        default_section="__no_defaults__",
    )
    cp.optionxform = str.lower
    try:
        cp.read_string(f"[{_TOP}]\n" + text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", (exc.lineno or 1) - 1) from None
    except configparser.DuplicateOptionError as exc:
        where_ = "top level" if exc.section == _TOP else f"[{exc.section}]"
        raise ConfigError(f"duplicate key {exc.option!r} at {where_}", (exc.lineno or 1) - 1) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse {line} (expected 'key = value')", lineno - 1) from None

    where = _locate(text)
    vals = _defaults()
    sweep: dict[str, tuple] = {}
    seen: dict[tuple[str, str], int] = {}
    for sec_name in cp.sections():
        if sec_name != _TOP and sec_name not in SCHEMA:
            raise ConfigError(f"unknown section [{sec_name}]", _section_line(text, sec_name))
        for raw_key, raw in cp.items(sec_name):
            lineno = where.get((sec_name, raw_key))
            if sec_name == "sweep" and raw_key not in SCHEMA["sweep"]:
                sec, key = _resolve(raw_key, lineno)
                if SCHEMA[sec][key].parse.__name__.startswith("list"):
                    raise ConfigError(f"list-valued key {sec}.{key} cannot be swept", lineno)
                items = [p.strip() for p in raw.split(",") if p.strip()]
                if not items:
                    raise ConfigError(f"sweep list for {raw_key!r} is empty", lineno)
                conv = []
                for item in items:
                    v = _convert(sec, key, item, lineno)
                    _check(sec, key, v, lineno)
                    conv.append(v)
                sweep[f"{sec}.{key}"] = tuple(conv)
                continue
            if sec_name == _TOP:
                sec, key = _resolve(raw_key, lineno)
            else:
                if raw_key not in SCHEMA[sec_name]:
                    raise ConfigError(f"unknown key {raw_key!r} in [{sec_name}]", lineno)
                sec, key = sec_name, raw_key
            if (sec, key) in seen:
                raise ConfigError(f"{sec}.{key} already set on line {seen[(sec, key)]}", lineno)
            seen[(sec, key)] = lineno
            v = _convert(sec, key, raw, lineno)
            _check(sec, key, v, lineno)
            vals[sec][key] = v
    cfg = RunConfig(vals, sweep)
    cfg.validate()
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Canonical text with every key explicit; ``parse_config`` reads it back unchanged."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[sec][key])}")
        if sec == "sweep":
            for name in sorted(cfg.sweep):
                lines.append(f"{name} = {_fmt(tuple(cfg.sweep[name]))}")
        lines.append("")
    return "\n".join(lines)
