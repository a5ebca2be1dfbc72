import re

import numpy as np
import pytest

from holocurve.corpus import corpus_curves, corpus_fb2_models, corpus_points

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_outcomes: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def curves():
    return corpus_curves()


@pytest.fixture(scope="session")
def fb2_models():
    return corpus_fb2_models()


@pytest.fixture(scope="session")
def points():
    return corpus_points


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        previous = _outcomes.get(number, ("PASS", name))[0]
        status = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        _outcomes[number] = (status, name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        status, name = _outcomes[number]
        terminalreporter.write_line(f"{status} criterion {number}: {name}")
