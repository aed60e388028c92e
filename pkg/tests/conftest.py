import numpy as np
import pytest
from hypothesis import settings

from amhd.initial import random_divfree
from amhd.spectral import Grid

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def grid32():
    return Grid.square(32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def divfree_primitive(grid32):
    return random_divfree(grid32, seed=3, formulation="primitive")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status, detail in sorted(lines, key=lambda x: int(x[0].split()[0][2:])):
            terminalreporter.write_line(f"{status}  {name}  {detail}")
