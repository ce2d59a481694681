from fractions import Fraction as F

import pytest

from mvps import Kernel, Measure, Mvps, MvpsSpec, Partition, conditional_kernel

_ACCEPTANCE = []


@pytest.fixture
def acceptance_record():
    """Collects one (criterion, passed, detail) line per acceptance criterion."""

    def record(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {criterion:>2}: {detail}")


@pytest.fixture
def nu3():
    return Measure.of([F(1, 5), F(3, 10), F(1, 2)])


@pytest.fixture
def split3():
    # {x1}, {x2, x3}
    return Partition.from_blocks([[0], [1, 2]], 3)


@pytest.fixture
def urn3(nu3, split3):
    return Mvps(MvpsSpec(2, nu3, conditional_kernel(nu3, split3)))


@pytest.fixture
def lopsided():
    """Rows (1/2, 1/2) and (0, 1): a probability kernel that is not conditional."""
    return Kernel.of([[F(1, 2), F(1, 2)], [0, 1]])
