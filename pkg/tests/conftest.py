import numpy as np
import pytest

from semijulia.cli import preset_pair
from semijulia.fields import GridSpec
from semijulia.polycore import GeneratorPair, Polynomial
from semijulia.potential import escape_radius
from semijulia.randdyn import TransitionGrid, compute_T


def poly(*coeffs):
    return Polynomial(tuple(coeffs))


Z2 = poly(0, 0, 1)
BASILICA = poly(-1, 0, 1)


@pytest.fixture(scope="session")
def annulus():
    return preset_pair("annulus")


@pytest.fixture(scope="session")
def cantor3():
    return preset_pair("cantor3")


@pytest.fixture(scope="session")
def qpair():
    return preset_pair("monomialQ")


@pytest.fixture(scope="session")
def annulus_op(annulus):
    return TransitionGrid.build(annulus, GridSpec.square(escape_radius(annulus), 512))


@pytest.fixture(scope="session")
def annulus_T(annulus, annulus_op):
    return compute_T(annulus, 0.5, tol=1e-6, op=annulus_op)


@pytest.fixture(scope="session")
def partner():
    from semijulia.loci import construct_partner
    return construct_partner(BASILICA, 3, 0)


@pytest.fixture(scope="session")
def basilica_pair(partner):
    return GeneratorPair(BASILICA, partner.g)


def radial_T(z):
    return np.clip(np.log2(np.abs(z) + 1e-300), 0.0, 1.0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
