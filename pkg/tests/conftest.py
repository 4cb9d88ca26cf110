import math

import pytest

from kinnet.topology import load_scenario

A = 1.0 / math.sqrt(3.0)


@pytest.fixture
def tripod():
    return load_scenario("tripod")


@pytest.fixture
def diamond():
    return load_scenario("diamond")


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Callable ``report(number, ok, detail)`` collecting one line per acceptance criterion."""
    lines = request.config._acceptance_lines

    def report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
