import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from softdt.core_data import Dataset, RngStream
from softdt.experiments.synth import synth_guyon

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def toy():
    """Two class-0 points at -2 and two class-1 points at 2."""
    return Dataset.from_arrays(np.array([[-2.0], [-2.0], [2.0], [2.0]]), [0, 0, 1, 1])


@pytest.fixture(scope="session")
def small_synth():
    return synth_guyon(120, 5, 3, 2, 1.0, RngStream(11))


@pytest.fixture(scope="session")
def three_class():
    return synth_guyon(150, 6, 4, 3, 1.0, RngStream(5))


def write_text(path, text):
    path.write_text(text)
    return str(path)


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Records one pass/fail line for an acceptance criterion.

    Call with ``(passed, detail)``; the line is printed immediately and
    repeated in the terminal summary.
    """
    def record(passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {request.node.name}: {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
