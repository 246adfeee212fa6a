import numpy as np
import pytest
from hypothesis import strategies as st

from bmclab.model import CappedK, Instance, Linear, Schedule, sqrt_model


def widths_from_fractions(fracs, cap=None):
    """Turn numbers in [0, 1) into a valid schedule (optionally capped)."""
    k, out = 0, []
    for u in fracs:
        lo = 1 if cap is None else max(1, k + 2 - cap)
        hi = k + 1
        w = lo + int(u * (hi - lo + 1))
        w = min(w, hi)
        out.append(w)
        k = k + 2 - w
    return Schedule(out)


def random_schedule(rng, n, cap=None):
    return widths_from_fractions(rng.random(n), cap)


def random_instance(rng, n, kind="exp"):
    if kind == "lognormal":
        return Instance(rng.lognormal(0, 1, n), rng.exponential(1, n))
    return Instance(rng.exponential(1, n), rng.exponential(1, n))


MODELS = [CappedK(1), CappedK(2), CappedK(3), Linear(), sqrt_model()]


@st.composite
def instances(draw, min_n=0, max_n=12):
    n = draw(st.integers(min_n, max_n))
    val = st.floats(0, 100, allow_nan=False, allow_infinity=False)
    ell = draw(st.lists(val, min_size=n, max_size=n))
    r = draw(st.lists(val, min_size=n, max_size=n))
    return Instance(ell, r)


@st.composite
def schedules(draw, n, cap=None):
    fr = draw(st.lists(st.floats(0, 1, exclude_max=True), min_size=n, max_size=n))
    return widths_from_fractions(fr, cap)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
