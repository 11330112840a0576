import pytest

from mmtlearn.gmmt import fddi_station, gmmt_to_mmt, renaming_example
from mmtlearn.models import fig1


@pytest.fixture
def m1():
    return fig1()


@pytest.fixture(scope="session")
def fddi():
    return gmmt_to_mmt(fddi_station())


@pytest.fixture(scope="session")
def fig9():
    return renaming_example()


_verdicts: list[str] = []


@pytest.fixture
def verdict():
    """Prints and records a ``criterion N: PASS|FAIL`` line, then asserts it passed."""

    def record(number, ok, detail=""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        print(line)
        _verdicts.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
