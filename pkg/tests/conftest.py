import numpy as np
import pytest

from qres import dimer

_ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str):
    """Store one acceptance verdict; the terminal summary prints them in order."""
    _ACCEPTANCE[criterion] = (bool(ok), detail)
    line = f"AC{criterion:02d} {'PASS' if ok else 'FAIL'} {detail}"
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"AC{k:02d} {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def site():
    return dimer.site_dephasing()
