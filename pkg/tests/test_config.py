import math

import pytest
from hypothesis import given, strategies as st

from amhd.config import SCHEMA, ConfigError, RunConfig, format_config, parse_config


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg.grid.shape == (128, 128)
    p = cfg.params
    assert (p.beta, p.eta, p.mode, p.formulation) == (1.5, 0.1, "partial-directional", "vorticity-current")
    assert cfg.step.dt == 5e-4
    assert cfg.kind == "simulate" and cfg.seed == 0 and cfg.threads == 1


def test_bare_override_leaves_others_unchanged():
    base = parse_config("")
    cfg = parse_config("beta = 1.25\n")
    assert cfg["physics.beta"] == 1.25
    for sec in SCHEMA:
        for key in SCHEMA[sec]:
            if (sec, key) != ("physics", "beta"):
                assert cfg.values[sec][key] == base.values[sec][key]


def test_negative_beta_names_rule():
    with pytest.raises(ConfigError, match="beta > 0") as info:
        parse_config("# comment\nbeta = -1\n")
    assert info.value.lineno == 2


@pytest.mark.parametrize(
    "text, line, pattern",
    [
        ("[time]\ndt = 1e-3\nbogus = 2\n", 3, "unknown key"),
        ("n = 64\nnot a pair\n", 2, "cannot parse"),
        ("[nope]\n", 1, "unknown section"),
        ("[grid]\nn = abc\n", 2, "grid.n"),
        ("[grid]\nn = 31\n", 2, "n even and >= 8"),
        ("[time]\ncfl_safety = 2\n", 2, "cfl_safety"),
        ("[physics]\nmode = weird\n", 2, "must be one of"),
        ("dt = 1e-3\n[time]\ndt = 2e-3\n", 3, "already set"),
        ("[sweep]\ngrid.n = \n", 2, "empty"),
        ("[sweep]\nsobolev = 1, 2\n", 2, "cannot be swept"),
    ],
)
def test_errors_carry_line_numbers(text, line, pattern):
    with pytest.raises(ConfigError, match=pattern) as info:
        parse_config(text)
    assert info.value.lineno == line


def test_cross_key_rules():
    with pytest.raises(ConfigError, match="snapshot"):
        parse_config("preset = snapshot\n")
    with pytest.raises(ConfigError, match="sweep"):
        parse_config("kind = sweep\n")


def test_sections_comments_and_lists():
    text = """
    # header comment
    [physics]
    eta = 0.05   # inline
    nonlinear = false
    [diagnostics]
    lq = 2, inf
    [initial]
    mode_k = 1, 4
    """
    cfg = parse_config("\n".join(line.strip() for line in text.splitlines()))
    assert cfg.params.eta == 0.05 and cfg.params.nonlinear is False
    assert cfg.diag.lq == (2.0, math.inf)
    assert cfg.initial.mode == (1, 4)


def test_sweep_points():
    cfg = parse_config("[sweep]\nphysics.beta = 1.25, 2\nmode = partial-directional, full-fractional\n")
    pts = cfg.sweep_points()
    assert len(pts) == 4
    assert pts[0] == (("physics.beta", 1.25), ("physics.mode", "partial-directional"))


def test_overrides():
    cfg = parse_config("").with_overrides([("time.t_end", "2.5"), ("seed", 9)])
    assert cfg.step.t_end == 2.5 and cfg.seed == 9
    with pytest.raises(ConfigError):
        parse_config("").with_overrides([("physics.eta", "0")])
    with pytest.raises(ConfigError):
        parse_config("").with_overrides([("kernel.nothing", "1")])


_values = st.fixed_dictionaries({
    "beta": st.floats(0.1, 4.0),
    "eta": st.floats(1e-4, 2.0),
    "dt": st.floats(1e-5, 1e-2),
    "n": st.sampled_from([16, 32, 64]),
    "seed": st.integers(0, 10**6),
    "adaptive": st.booleans(),
    "mode": st.sampled_from(["partial-directional", "full-fractional", "classical-laplacian"]),
})


@given(_values)
def test_format_round_trip(vals):
    text = "\n".join(f"{k} = {v}" for k, v in vals.items())
    cfg = parse_config(text)
    again = parse_config(format_config(cfg))
    assert again == cfg
    assert isinstance(again, RunConfig)
