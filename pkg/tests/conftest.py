import numpy as np
import pytest

from kklab import catalog as cat


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bundles():
    names = ["hopf", "trivial-su2-product", "warped-su2", "warped-u1-line(1.0)", "warped-u1-line(1.0, 2)", "flat-circle-u1"]
    return {name: cat.lookup(name)[1] for name in names}


def random_spd(rng, n, floor=0.3):
    a = rng.normal(size=(n, n))
    return a @ a.T + floor * np.eye(n)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
