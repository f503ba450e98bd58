import numpy as np
import pytest

from nctransport.algebra import Density, element_from_values, random_density
from nctransport.errors import ValidationError
from nctransport.semigroup import (dissipation_residual, equilibrium_density,
                                   heat_flow, is_irreducible,
                                   l1_to_equilibrium)
from conftest import graph_density


def test_two_point_heat_flow_closed_form(two_point):
    # spectrum {0, 4}: rho_t = (1 + e^{-4t} c, 1 - e^{-4t} c) in values
    rho = graph_density(two_point, [2.0, 0.0])
    for t in (0.1, 0.5, 1.3):
        vals = heat_flow(two_point, rho, t).values().real
        assert vals[0] == pytest.approx(1 + np.exp(-4 * t), abs=1e-12)
        assert vals[1] == pytest.approx(1 - np.exp(-4 * t), abs=1e-12)


def test_negative_time_rejected(two_point):
    rho = graph_density(two_point, [1.0, 1.0])
    with pytest.raises(ValidationError):
        heat_flow(two_point, rho, -0.1)


def test_semigroup_property(two_block):
    rho = random_density(two_block.algebra, seed=9, floor=1e-3)
    a = heat_flow(two_block, heat_flow(two_block, rho, 0.3), 0.4)
    b = heat_flow(two_block, rho, 0.7)
    from nctransport.algebra import l2_norm
    assert l2_norm(two_block.algebra, a - b) < 1e-12


def test_irreducibility(two_point, four_cycle, qubit_depol):
    for calc in (two_point, four_cycle, qubit_depol):
        assert is_irreducible(calc)
    # disconnected graph is reducible
    from nctransport.calculus import GraphSpec, graph_calculus
    g = graph_calculus(GraphSpec(3, np.array([[0.0, 1.0, 0.0],
                                              [1.0, 0.0, 0.0],
                                              [0.0, 0.0, 0.0]]),
                                 np.ones(3)))
    assert not is_irreducible(g)


def test_equilibration(two_point, four_cycle, qubit_depol):
    for calc, seed in ((two_point, 1), (four_cycle, 2), (qubit_depol, 3)):
        rho = random_density(calc.algebra, seed=seed, floor=0.0)
        assert l1_to_equilibrium(calc, heat_flow(calc, rho, 50.0)) <= 1e-8


def test_dissipation_identity(two_point, qubit_depol):
    for calc, seed in ((two_point, 4), (qubit_depol, 5)):
        rho = random_density(calc.algebra, seed=seed, floor=1e-2)
        assert dissipation_residual(calc, rho, 0.8, q=32) <= 1e-8


def test_equilibrium_density(two_point):
    eq = equilibrium_density(two_point)
    assert np.allclose(eq.values().real, [1.0, 1.0])
