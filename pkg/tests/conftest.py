import numpy as np
import pytest

from hardrods.core import RodGeometry, classify_datum, random_state

ACCEPTANCE_RESULTS = {}


def random_good_case(rng, n_range=(2, 32), radii=(0.0, 0.25, 1.0)):
    """Random geometry plus a datum classified good."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        geom = RodGeometry(n, float(rng.choice(radii)))
        z0 = random_state(geom, rng, mean_gap=float(rng.uniform(0.2, 3.0)), start=float(rng.normal(0, 5)))
        if classify_datum(geom, z0).is_good:
            return geom, z0


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
