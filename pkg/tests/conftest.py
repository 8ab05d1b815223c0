from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_criteria: dict[str, list[bool]] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


def read(name: str) -> bytes:
    return (DATA / name).read_bytes()


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for name in getattr(report, "criteria", ()):
        _criteria.setdefault(name, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = [m.args[0] for m in item.iter_markers("acceptance")]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _criteria.items():
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({sum(results)}/{len(results)} checks)")
