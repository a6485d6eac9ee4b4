import pytest

from zkpfedeval import curve
from zkpfedeval.protocol import threshold_circuit
from zkpfedeval.zk import Groth16Backend, MockBackend

KERNELS = curve.available()


@pytest.fixture(scope="session")
def circuit():
    return threshold_circuit()


@pytest.fixture(scope="session")
def snark():
    return Groth16Backend()


@pytest.fixture(scope="session")
def snark_keys(snark, circuit):
    return snark.setup(circuit.cs, rng_seed=7)


@pytest.fixture(scope="session")
def mock():
    return MockBackend()


@pytest.fixture(scope="session")
def mock_keys(mock, circuit):
    return mock.setup(circuit.cs)


# -- acceptance reporting ----------------------------------------------------

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(number, passed, detail=""):
        _CRITERIA.append((number, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: (int(str(c[0]).rstrip("abc")), str(c[0]))):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
