import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def report_criterion():
    """Record one acceptance line; the summary prints them after the run."""

    def record(name, ok, detail=""):
        """``ok=None`` marks a criterion that could not run (SKIP)."""
        _ACCEPTANCE.append((name, None if ok is None else bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        status = "SKIP" if ok is None else "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ar1_path(a, T, seed):
    from tvarselect.models import Constant, TvarSpec, simulate_tvar

    return simulate_tvar(TvarSpec((Constant(a),)), T, seed)
