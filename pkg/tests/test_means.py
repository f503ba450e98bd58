import numpy as np
import pytest

from nctransport.algebra import (functional_calculus, random_density,
                                 random_element)
from nctransport.errors import DomainError, SingularityError
from nctransport.means import (MeanKind, divided_difference_apply, mean_value,
                               mean_matrix, mean_quad_form,
                               mean_quad_form_grad, rho_hat_apply,
                               rho_hat_solve, rho_norm)

KINDS = ["am", "lm", "gm", "hm"]


def test_scalar_mean_values():
    assert mean_value("am", 1.0, 3.0) == pytest.approx(2.0)
    assert mean_value("gm", 1.0, 4.0) == pytest.approx(2.0)
    assert mean_value("hm", 1.0, 3.0) == pytest.approx(1.5)
    assert mean_value("lm", 1.0, np.e) == pytest.approx((np.e - 1.0))
    assert mean_value("lm", 2.0, 2.0) == pytest.approx(2.0)
    assert mean_value("lm", 5.0, 0.0) == 0.0
    assert mean_value("am", 5.0, 0.0) == pytest.approx(2.5)
    with pytest.raises(DomainError):
        mean_value("lm", -1.0, 2.0)


def test_mean_ordering_scalar():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s, t = rng.uniform(1e-6, 10.0, size=2)
        hm = mean_value("hm", s, t)
        gm = mean_value("gm", s, t)
        lm = mean_value("lm", s, t)
        am = mean_value("am", s, t)
        assert hm <= gm + 1e-12 and gm <= lm + 1e-12 and lm <= am + 1e-12


@pytest.fixture(params=["path_graph", "two_block"])
def calc(request):
    return request.getfixturevalue(request.param)


@pytest.mark.parametrize("kind", KINDS)
def test_rho_hat_solve_roundtrip(calc, kind):
    rng = np.random.default_rng(5)
    for i in range(5):
        rho = random_density(calc.algebra, seed=100 + i, floor=1e-2)
        xi = calc.random_tangent(rng)
        m = rho_hat_apply(kind, rho, calc, xi)
        back = rho_hat_solve(kind, rho, calc, m)
        assert calc.tangent_norm(rho_hat_apply(kind, rho, calc, back) - m) \
            < 1e-9 * max(1.0, calc.tangent_norm(m))


def test_rho_hat_solve_singularity(two_point):
    from conftest import graph_density
    rho = graph_density(two_point, [2.0, 0.0])  # mass only on node 0
    xi = two_point.tangent_from_coords(np.array([1.0]))
    with pytest.raises(SingularityError):
        rho_hat_solve("lm", rho, two_point, xi, mode="strict")
    # tikhonov mode returns a finite answer
    out = rho_hat_solve("lm", rho, two_point, xi, mode="tikhonov", eps=1e-6)
    assert np.isfinite(two_point.tangent_norm(out))


def test_lm_chain_rule_cancellation(calc):
    for i in range(10):
        rho = random_density(calc.algebra, seed=200 + i, floor=1e-2)
        log_rho = functional_calculus(calc.algebra, rho, np.log)
        lhs = rho_hat_apply("lm", rho, calc, calc.d(log_rho))
        rhs = calc.d(rho)
        assert calc.tangent_norm(lhs - rhs) < 1e-10 * calc.tangent_norm(rhs)


def test_divided_difference_chain_rule(calc):
    rng = np.random.default_rng(6)
    for f, fp in ((lambda t: t ** 2, lambda t: 2 * t),
                  (np.exp, np.exp)):
        a = random_element(calc.algebra, rng, hermitian=True)
        fa = functional_calculus(calc.algebra, a, f)
        lhs = calc.d(fa)
        rhs = divided_difference_apply(f, a, calc, calc.d(a), fprime=fp)
        assert calc.tangent_norm(lhs - rhs) < 1e-9 * max(1.0, calc.tangent_norm(lhs))


@pytest.mark.parametrize("kind", KINDS)
def test_mean_matrix_matches_quad_form(calc, kind):
    rng = np.random.default_rng(7)
    rho = random_density(calc.algebra, seed=71, floor=1e-2)
    for floor in (0.0, 1e-3):
        tag, A = mean_matrix(kind, calc, rho, floor)
        c = rng.standard_normal(calc.tangent_dim)
        if tag == "diag":
            q_mat = float(c @ (A * c))
        else:
            q_mat = float(c @ (A @ c))
        q = mean_quad_form(kind, calc, rho, c, floor)
        assert q_mat == pytest.approx(q, rel=1e-10)
        # consistency with the norm defined through rho-hat
        if floor == 0.0:
            xi = calc.tangent_from_coords(c)
            assert q == pytest.approx(rho_norm(kind, rho, calc, xi) ** 2,
                                      rel=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_mean_quad_form_gradient(calc, kind):
    rng = np.random.default_rng(8)
    rho = random_density(calc.algebra, seed=81, floor=5e-2)
    eta = rng.standard_normal(calc.tangent_dim)
    mu0 = calc.basis.coords(rho)
    q0, grad = mean_quad_form_grad(kind, calc, rho, eta, 0.0)
    v = rng.standard_normal(len(mu0))
    v /= np.linalg.norm(v)
    h = 1e-5
    qp = mean_quad_form(kind, calc, calc.basis.element(mu0 + h * v), eta, 0.0)
    qm = mean_quad_form(kind, calc, calc.basis.element(mu0 - h * v), eta, 0.0)
    fd = (qp - qm) / (2 * h)
    assert float(grad @ v) == pytest.approx(fd, rel=5e-5, abs=1e-7)
