import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from weakbl.funcspace import StepFunction

settings.register_profile(
    "default", derandomize=True, deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def step_functions(draw, max_cells=6, bound=4.0):
    n = draw(st.integers(1, max_cells))
    cuts = draw(st.lists(st.integers(1, 999), min_size=n - 1, max_size=n - 1, unique=True))
    x = [0.0] + sorted(c / 1000 for c in cuts) + [1.0]
    vals = draw(st.lists(st.floats(-bound, bound, allow_nan=False), min_size=n, max_size=n))
    return StepFunction(x, vals)


def random_step(rng, max_cells=6, scale=1.0):
    m = int(rng.integers(1, max_cells + 1))
    x = np.sort(rng.uniform(0, 1, m - 1))
    return StepFunction(np.r_[0.0, x, 1.0], scale * rng.normal(size=m))


@pytest.fixture
def sign():
    return StepFunction([0.0, 0.5, 1.0], [1.0, -1.0])


def random_signed_step(rng, min_cells=4, max_cells=7, scale=2.0):
    """Step function with at least two positive and two negative levels."""
    m = int(rng.integers(min_cells, max_cells + 1))
    k = int(rng.integers(2, m - 1))
    vals = np.concatenate([-scale * rng.uniform(0.05, 1, k), scale * rng.uniform(0.05, 1, m - k)])
    rng.shuffle(vals)
    x = np.sort(rng.uniform(0, 1, m - 1))
    return StepFunction(np.r_[0.0, x, 1.0], vals)


def projected_profiles(rng, p, count, max_draws=1000):
    """``count`` random profiles with both vanishing moments.

    Level sets whose moment cone misses the origin cannot be reweighted; they
    are redrawn.
    """
    from weakbl.counterex import project_moments
    from weakbl.funcspace import ValidationError

    out = []
    for _ in range(max_draws):
        try:
            out.append(project_moments(random_signed_step(rng), p))
        except ValidationError:
            continue
        if len(out) == count:
            return out
    raise RuntimeError("too few feasible draws")


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record_acceptance(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
