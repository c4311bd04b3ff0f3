from importlib import resources

import pytest

from kolyvagin_lab.scenario import Scenario

NAMES = ("S1", "S2", "S3", "S4")


def data_path(name: str):
    return resources.files("kolyvagin_lab") / "data" / f"{name}.json"


def load(name: str) -> Scenario:
    return Scenario.load(data_path(name))


@pytest.fixture(params=NAMES)
def scn(request):
    return load(request.param)


@pytest.fixture
def s1():
    return load("S1")


@pytest.fixture
def s2():
    return load("S2")


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
