import numpy as np
import pytest

from nctransport.algebra import (Density, element_from_values,
                                 functional_calculus, random_density,
                                 random_element, trace)
from nctransport.errors import PreconditionError
from nctransport.functionals import (am_seminorm, carre_du_champ,
                                     connes_lower_bound, entropy,
                                     entropy_variational_gap,
                                     fisher_information, klein_gap,
                                     theta_seminorm)
from conftest import graph_density


def test_two_point_entropy_closed_form(two_point):
    p = 0.3
    rho = graph_density(two_point, [2 * p, 2 * (1 - p)])
    expect = p * np.log(2 * p) + (1 - p) * np.log(2 * (1 - p))
    assert entropy(two_point.algebra, rho) == pytest.approx(expect, abs=1e-12)


def test_entropy_requires_unit_trace(two_point):
    x = element_from_values(two_point.algebra, [2.0, 2.0])
    with pytest.raises(PreconditionError):
        entropy(two_point.algebra, x)


def test_two_point_fisher_closed_form(two_point):
    # I(rho) = E(rho, log rho) = (1/2) b (rho0-rho1)(log rho0 - log rho1)
    p = 0.8
    rho = graph_density(two_point, [2 * p, 2 * (1 - p)])
    fi = fisher_information(two_point, rho)
    expect = (4 * p - 2) * (np.log(2 * p) - np.log(2 - 2 * p))
    assert fi.finite
    assert float(fi) == pytest.approx(expect, rel=1e-12)


def test_fisher_infinite_on_boundary(two_point):
    rho = graph_density(two_point, [2.0, 0.0])
    fi = fisher_information(two_point, rho)
    assert not fi.finite and float(fi) == np.inf


def test_carre_du_champ_defines_energy(path_graph, two_block):
    rng = np.random.default_rng(20)
    for calc in (path_graph, two_block):
        for _ in range(10):
            a = random_element(calc.algebra, rng)
            x = random_element(calc.algebra, rng, hermitian=True)
            gamma = carre_du_champ(calc, a)
            lhs = trace(calc.algebra, x @ gamma)
            rhs = calc.inner(calc.left_act(x, calc.d(a)), calc.d(a))
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_theta_seminorm_two_point_lm(two_point):
    # a = (0, 1): sup_rho b * LM(rho0, rho1) |a0 - a1|^2 = LM at rho0=rho1=1
    a = element_from_values(two_point.algebra, [0.0, 1.0])
    res = theta_seminorm("lm", two_point, a)
    assert res.converged
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert res.gap <= 1e-6


def test_theta_seminorm_below_am(two_block):
    rng = np.random.default_rng(21)
    for kind in ("lm", "gm", "hm"):
        a = random_element(two_block.algebra, rng, hermitian=True)
        res = theta_seminorm(kind, two_block, a)
        assert res.value <= am_seminorm(two_block, a) * (1 + 1e-8)


def test_klein_gap_nonnegative(two_block):
    for i in range(20):
        r0 = random_density(two_block.algebra, seed=300 + i, floor=1e-3)
        r1 = random_density(two_block.algebra, seed=400 + i, floor=1e-3)
        g = klein_gap(two_block.algebra, lambda t: t * np.log(t),
                      lambda t: np.log(t) + 1.0, r0, r1)
        assert g >= -1e-10


def test_entropy_variational_gap_and_equality(two_point, qubit_depol):
    for calc in (two_point, qubit_depol):
        alg = calc.algebra
        rng = np.random.default_rng(22)
        for i in range(20):
            rho = random_density(alg, seed=500 + i, floor=1e-3)
            a = random_element(alg, rng, hermitian=True)
            a = a @ a  # positive semidefinite test element
            assert entropy_variational_gap(alg, rho, a) >= -1e-10
        # equality at a = log(M rho) with M = 1/lambda_min (keeps a >= 0)
        rho = random_density(alg, seed=77, floor=1e-2)
        M = 1.0 / rho.min_eigenvalue()
        a_star = functional_calculus(alg, rho * M, np.log)
        assert abs(entropy_variational_gap(alg, rho, a_star)) < 1e-8


def test_connes_lower_bound_two_point(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.4, 0.6])
    lb = connes_lower_bound(two_point, r0, r1, budget=100, seed=0)
    # |tau(a(rho1-rho0))| <= ||a||_AM * W_AM; and the bound is attained in 1D
    assert 0.0 < lb
    from nctransport.transport import two_point_oracle
    assert lb <= two_point_oracle("am", two_point.spec, r0, r1) * (1 + 1e-6)
