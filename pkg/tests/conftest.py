import numpy as np
import pytest

from nctransport.algebra import AlgebraSpec, Density, Element, element_from_values
from nctransport.calculus import (GraphSpec, LindbladSpec, graph_calculus,
                                  lindblad_calculus)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture(scope="session")
def two_point():
    """Two-node graph, unit edge weight, node weights 1/2 (tau(1) = 1)."""
    g = GraphSpec(2, np.array([[0.0, 1.0], [1.0, 0.0]]),
                  np.array([0.5, 0.5]))
    return graph_calculus(g)


@pytest.fixture(scope="session")
def four_cycle():
    b = np.zeros((4, 4))
    for i in range(4):
        b[i, (i + 1) % 4] = b[(i + 1) % 4, i] = 1.0
    g = GraphSpec(4, b, np.full(4, 0.25))
    return graph_calculus(g)


@pytest.fixture(scope="session")
def path_graph():
    """Five-node path graph with non-uniform weights."""
    rng = np.random.default_rng(7)
    n = 5
    b = np.zeros((n, n))
    for i in range(n - 1):
        w = float(rng.uniform(0.5, 2.0))
        b[i, i + 1] = b[i + 1, i] = w
    m = rng.uniform(0.5, 2.0, size=n)
    return graph_calculus(GraphSpec(n, b, m))


@pytest.fixture(scope="session")
def qubit_depol():
    """M_2 with weight 1/2 (tau(1) = 1) and the three Pauli jumps."""
    alg = AlgebraSpec(((2, 0.5),))
    jumps = tuple(Element(alg, (0.5 * p,)) for p in (PAULI_X, PAULI_Y, PAULI_Z))
    return lindblad_calculus(LindbladSpec(alg, jumps))


@pytest.fixture(scope="session")
def two_block():
    """Direct sum M_2 + M_1 with mixing jumps inside the M_2 block."""
    alg = AlgebraSpec(((2, 0.4), (1, 0.2)))
    j1 = Element(alg, (PAULI_X.copy(), np.array([[0.3]], dtype=complex)))
    j2 = Element(alg, (PAULI_Z.copy(), np.array([[-0.1]], dtype=complex)))
    j3 = Element(alg, (0.5 * PAULI_Y, np.array([[0.0]], dtype=complex)))
    return lindblad_calculus(LindbladSpec(alg, (j1, j2, j3)))


def graph_density(d, values):
    return Density.from_element(element_from_values(d.algebra, values))


def qubit_density(d, mat):
    return Density.from_element(Element(d.algebra, (np.asarray(mat, dtype=complex),)))
