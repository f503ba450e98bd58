import numpy as np
import pytest

from nctransport.errors import PreconditionError, ValidationError
from nctransport.verify import (check_contraction, check_evi,
                                check_geodesic_convexity, check_talagrand,
                                estimate_ge_constant, feller_check)
from conftest import graph_density


def test_ge_two_point_value(two_point):
    ge = estimate_ge_constant("lm", two_point, samples=30, seed=0)
    # symmetric two-point instance: the quotient is constant = spectral gap
    assert ge.estimate == pytest.approx(4.0, rel=1e-3)
    assert ge.samples > 0


def test_ge_monotone_in_samples(two_point):
    k_small = estimate_ge_constant("lm", two_point, samples=10, seed=3,
                                   ascent_budget=0).estimate
    k_large = estimate_ge_constant("lm", two_point, samples=40, seed=3,
                                   ascent_budget=0).estimate
    assert k_large <= k_small + 1e-12


def test_ge_deterministic(two_point):
    a = estimate_ge_constant("lm", two_point, samples=15, seed=9).estimate
    b = estimate_ge_constant("lm", two_point, samples=15, seed=9).estimate
    assert a == b


def test_ge_scaling_with_edge_weight():
    from nctransport.calculus import GraphSpec, graph_calculus
    import numpy as np
    base = graph_calculus(GraphSpec(2, np.array([[0.0, 1.0], [1.0, 0.0]]),
                                    np.array([0.5, 0.5])))
    double = graph_calculus(GraphSpec(2, np.array([[0.0, 2.0], [2.0, 0.0]]),
                                      np.array([0.5, 0.5])))
    k1 = estimate_ge_constant("lm", base, samples=20, seed=1).estimate
    k2 = estimate_ge_constant("lm", double, samples=20, seed=1).estimate
    assert k2 == pytest.approx(2.0 * k1, rel=0.02)


def test_ge_rejects_reducible():
    from nctransport.calculus import GraphSpec, graph_calculus
    g = graph_calculus(GraphSpec(3, np.array([[0.0, 1.0, 0.0],
                                              [1.0, 0.0, 0.0],
                                              [0.0, 0.0, 0.0]]), np.ones(3)))
    with pytest.raises(PreconditionError):
        estimate_ge_constant("lm", g, samples=5, seed=0)


def test_contraction_trivial_cases(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    rep = check_contraction("lm", two_point, r0, r1, K=-10.0,
                            t_grid=[0.2, 1.0], N=8)
    assert rep.passed
    rep0 = check_contraction("lm", two_point, r0, r1, K=3.8, t_grid=[0.0], N=8)
    assert rep0.margin == pytest.approx(0.0, abs=2e-4)


def test_evi_reports_three_forms(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    rep = check_evi("lm", two_point, r0, r1, K=3.8, t_grid=[0.2], N=8)
    assert rep.passed
    row = rep.rows[0]
    assert {"pointwise", "integrated", "regularization"} <= set(row)


def test_geodesic_convexity_equal_endpoints(two_point):
    r = graph_density(two_point, [0.8, 1.2])
    rep = check_geodesic_convexity("lm", two_point, r, r, K=0.0, N=8)
    assert rep.passed
    assert abs(rep.margin) < 1e-8


def test_talagrand_margin_monotone_in_k(two_point):
    r = graph_density(two_point, [0.4, 1.6])
    full = check_talagrand("lm", two_point, r, K=3.8, N=8)
    half = check_talagrand("lm", two_point, r, K=1.9, N=8)
    assert full.passed and half.passed
    assert half.margin > full.margin


def test_talagrand_preconditions(path_graph, two_point):
    r = graph_density(two_point, [0.4, 1.6])
    with pytest.raises(PreconditionError):
        check_talagrand("lm", two_point, r, K=-1.0)
    # path_graph has tau(1) != 1
    from nctransport.algebra import random_density
    rho = random_density(path_graph.algebra, seed=1, floor=1e-2)
    with pytest.raises(PreconditionError):
        check_talagrand("lm", path_graph, rho, K=1.0)


def test_feller_trivial_and_random(two_point):
    one = two_point.algebra.identity()
    rep = feller_check("lm", two_point, one, [0.5], K=3.8, samples=5)
    assert rep.passed  # d(1) = 0
    a = two_point.basis.element(np.array([0.3, -0.9]))
    rep = feller_check("lm", two_point, a, [0.1, 1.0, 10.0], K=3.8, samples=10)
    assert rep.passed


def test_t_grid_validation(two_point):
    a = two_point.basis.element(np.array([0.3, -0.9]))
    with pytest.raises(ValidationError):
        feller_check("lm", two_point, a, [0.0], K=1.0)
    with pytest.raises(ValidationError):
        estimate_ge_constant("lm", two_point, samples=3, t_grid=[-1.0])
