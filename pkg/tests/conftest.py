import numpy as np
import pytest

from hodgeflow.complex import build_complex

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def triangle():
    """Filled triangle on vertices 1, 2, 3."""
    return build_complex([{1, 2, 3}], K=2)


@pytest.fixture
def ring():
    """Hollow triangle: three edges, no 2-simplex."""
    return build_complex([{1, 2}, {1, 3}, {2, 3}], K=2)


@pytest.fixture
def path_graph():
    return build_complex([{1, 2}, {2, 3}], K=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    def _report(name: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
