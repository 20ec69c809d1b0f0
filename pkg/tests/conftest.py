import numpy as np
import pytest

from flagrecon.oracle import make_harmonic
from flagrecon.scalar_field import SphereGrid
from flagrecon.transforms import forward_field

ACCEPTANCE_SEEDS = (0, 1, 2, 3, 4)

_criteria: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _criteria.setdefault(marker.args[0], []).append(
        ("PASS" if rep.passed else "FAIL", detail or item.name))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        status = "PASS" if all(s == "PASS" for s, _ in results) else "FAIL"
        details = " | ".join(d for _, d in results)
        terminalreporter.write_line(f"CRITERION {n}: {status}  ({details})")


@pytest.fixture(scope="session")
def harmonic_densities():
    """The five seeded lmax-4, margin-0.1 densities used across criteria."""
    return {s: make_harmonic(4, s, 0.1) for s in ACCEPTANCE_SEEDS}


@pytest.fixture(scope="session")
def harmonic_fields(harmonic_densities):
    return {s: forward_field(h) for s, h in harmonic_densities.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_directions(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture(scope="session")
def default_grid():
    return SphereGrid(32, 64)
