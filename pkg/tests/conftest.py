import numpy as np
import pytest

from abcfab.systems import SystemSpec, register_system, unregister_system

ACCEPTANCE_PREFIX = "test_acceptance.py::"
_acceptance_results = []


@pytest.fixture
def zero_system():
    """A registered one-component system with f = 0."""
    spec = SystemSpec(
        name="zero_rhs",
        dimension=1,
        params={},
        func=lambda t, x, p, o: np.zeros(1),
        default_ic=(1.0,),
    )
    register_system(spec, replace=True)
    yield spec
    unregister_system(spec.name)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    if ACCEPTANCE_PREFIX not in report.nodeid.replace("\\", "/").split("tests/")[-1]:
        return
    name = report.nodeid.split("::")[-1]
    detail = ""
    for key, value in report.user_properties:
        if key == "detail":
            detail = value
    _acceptance_results.append((name, report.outcome, report.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration, detail in _acceptance_results:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"{verdict}  {name}  ({duration:.2f} s)"
        if detail:
            line += f"  {detail}"
        terminalreporter.write_line(line)
