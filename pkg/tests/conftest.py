import math

import numpy as np
import pytest
from hypothesis import settings

from ssfourier.ifs_core import similarity_dimension, validate_ifs
from ssfourier.walk_renewal import make_distribution, step_distribution

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

LN2, LN3 = math.log(2.0), math.log(3.0)


@pytest.fixture(scope="session")
def cantor():
    return validate_ifs([(1 / 3, 0.0, 0.5), (1 / 3, 2 / 3, 0.5)])


@pytest.fixture(scope="session")
def half_third():
    return validate_ifs([(0.5, 0.0, 0.5), (1 / 3, 2 / 3, 0.5)])


@pytest.fixture(scope="session")
def uniform():
    return validate_ifs([(0.5, 0.0, 0.5), (0.5, 0.5, 0.5)])


@pytest.fixture(scope="session")
def dist23(half_third):
    return step_distribution(half_third)


@pytest.fixture(scope="session")
def dist_ln2():
    return make_distribution([LN2], [1.0])


def random_spec(rng, max_dim=1.2):
    """A valid random IFS with 2-4 maps inside [0, 1] and similarity dimension <= max_dim."""
    while True:
        m = int(rng.integers(2, 5))
        r = rng.uniform(0.15, 0.7, m)
        p = rng.dirichlet(np.ones(m) * 2.0)
        if p.min() < 1e-3:
            continue
        p = p / p.sum()
        p[-1] = 1.0 - p[:-1].sum()
        b = rng.uniform(0.0, 1.0 - r)
        try:
            spec = validate_ifs(list(zip(r, b, p)))
        except ValueError:
            continue
        if similarity_dimension(spec) <= max_dim:
            return spec


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(results):
        terminalreporter.write_line(line)
    passed = sum(ok for _, ok, _ in results)
    terminalreporter.write_line(f"{passed}/{len(results)} criteria passed")
