from __future__ import annotations

import pytest

from deadcore.params import derive
from deadcore.verify import certify_regime, solve_regime

REFERENCE = (2.0, 0.5, 3)
BREADTH = [(2.0, 0.5, 3), (3.0, 0.25, 1), (1.8, 0.5, 5)]

_BUNDLES: dict = {}


def bundle_for(m: float, q: float, N: int):
    """Full pipeline for one regime, solved once per session."""
    key = (m, q, N)
    if key not in _BUNDLES:
        p = derive(m, q, N)
        b = solve_regime(p)
        _BUNDLES[key] = (p, b, certify_regime(p, b))
    return _BUNDLES[key]


@pytest.fixture(scope="session")
def ref_params():
    return derive(*REFERENCE)


@pytest.fixture(scope="session")
def ref_bundle():
    return bundle_for(*REFERENCE)[1]


@pytest.fixture(scope="session")
def ref_certs():
    return bundle_for(*REFERENCE)[2]


# one line per acceptance criterion in the terminal summary

_CRITERIA: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    name = dict(report.user_properties).get("criterion")
    if name is None:
        return
    _CRITERIA.append((name, "PASS" if report.outcome == "passed" else "FAIL"))


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _CRITERIA:
        terminalreporter.write_line(f"{status}  {name}")
