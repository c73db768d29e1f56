import pytest

from qiso.models import circle_model, disconnected_model, torus_model
from qiso.spectral import build_laplacian

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def circle16():
    m = circle_model(16)
    return m, build_laplacian(m)


@pytest.fixture(scope="session")
def torus6():
    m = torus_model(6)
    return m, build_laplacian(m)


@pytest.fixture(scope="session")
def torus4():
    m = torus_model(4)
    return m, build_laplacian(m)


@pytest.fixture(scope="session")
def disconnected6():
    m = disconnected_model(6)
    return m, build_laplacian(m)
