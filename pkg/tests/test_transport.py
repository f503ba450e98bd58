import numpy as np
import pytest

from nctransport.algebra import random_density
from nctransport.errors import StructuralError, ValidationError
from nctransport.transport import (bb_distance, convexity_check_w2, geodesic,
                                   transport_lower_bound, two_point_oracle)
from conftest import graph_density


def test_oracle_matches_solver_two_point(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    for kind in ("lm", "am"):
        res = bb_distance(kind, two_point, r0, r1, N=32)
        ref = two_point_oracle(kind, two_point.spec, r0, r1)
        assert res.distance == pytest.approx(ref, rel=5e-4)


def test_am_distance_closed_form(two_point):
    # AM: theta = (rho0+rho1)/2 = 1 on densities with m = 1/2; the oracle
    # integrand is constant 1/sqrt(w * 2) in mass coordinates * ... check
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    ref = two_point_oracle("am", two_point.spec, r0, r1)
    # masses s = m rho: 0.2 -> 0.75; thetais constant (rho0+rho1)/2 = 1
    assert ref == pytest.approx(abs(0.75 - 0.2) / np.sqrt(1.0), rel=1e-10)


def test_zero_distance(two_point):
    r = graph_density(two_point, [0.8, 1.2])
    res = bb_distance("lm", two_point, r, r, N=8)
    assert res.distance <= 1e-6
    assert res.certificates["feasibility_residual"] <= 1e-9


def test_certificates_present(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    res = bb_distance("lm", two_point, r0, r1, N=16)
    cert = res.certificates
    assert cert["feasibility_residual"] <= 1e-9
    assert cert["grid"] == 16
    assert cert["refinement_delta"] > 0.0
    assert res.error_bar == cert["refinement_delta"]
    assert abs(cert["action_recomputed"] - res.action) <= 1e-8 * res.action
    # objective history is nonincreasing within each continuation stage
    assert len(cert["stage_objectives"]) == len(cert["eps_schedule"])


def test_path_endpoints_and_continuity(four_cycle):
    r0 = graph_density(four_cycle, [2.0, 0.8, 0.4, 0.8])
    r1 = graph_density(four_cycle, [0.4, 1.2, 1.6, 0.8])
    res = bb_distance("lm", four_cycle, r0, r1, N=8, refine=False)
    path = res.path
    assert len(path.densities) == 9 and len(path.momenta) == 8
    # endpoints equal the eps-regularized inputs up to eps_final
    assert np.allclose(path.densities[0].values().real, r0.values().real,
                       atol=1e-3)
    assert np.allclose(path.densities[-1].values().real, r1.values().real,
                       atol=1e-3)


def test_symmetry(two_point, qubit_depol):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    d01 = bb_distance("lm", two_point, r0, r1, N=16, refine=False).distance
    d10 = bb_distance("lm", two_point, r1, r0, N=16, refine=False).distance
    assert d01 == pytest.approx(d10, abs=1e-6)


def test_lindblad_distance_positive(qubit_depol):
    r0 = random_density(qubit_depol.algebra, seed=31, floor=1e-2)
    r1 = random_density(qubit_depol.algebra, seed=32, floor=1e-2)
    res = bb_distance("lm", qubit_depol, r0, r1, N=8, refine=False)
    assert res.distance > 0
    assert res.certificates["feasibility_residual"] <= 1e-9


def test_oracle_rejects_bad_instance(four_cycle):
    r = graph_density(four_cycle, [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(StructuralError):
        two_point_oracle("lm", four_cycle.spec, r, r)


def test_grid_validation(two_point):
    r = graph_density(two_point, [0.8, 1.2])
    with pytest.raises(ValidationError):
        bb_distance("lm", two_point, r, r, N=1)


def test_geodesic_constant_speed(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    path = geodesic("lm", two_point, r0, r1, N=16)
    sp = path.speeds
    assert np.max(np.abs(sp - sp.mean())) / sp.mean() <= 0.05
    # path length consistent with the distance
    length = np.sum(np.sqrt(sp)) / path.grid
    ref = bb_distance("lm", two_point, r0, r1, N=16, refine=False).distance
    assert length == pytest.approx(ref, rel=1e-3)


def test_lower_bound_sandwich(two_point):
    r0 = graph_density(two_point, [0.4, 1.6])
    r1 = graph_density(two_point, [1.5, 0.5])
    lb = transport_lower_bound("lm", two_point, r0, r1, budget=6, seed=0)
    ub = bb_distance("lm", two_point, r0, r1, N=32, refine=False).distance
    assert 0 < lb <= ub * (1 + 1e-4)


def test_w2_convexity(two_point):
    rows = convexity_check_w2(
        "lm", two_point,
        graph_density(two_point, [0.4, 1.6]),
        graph_density(two_point, [0.8, 1.2]),
        graph_density(two_point, [1.6, 0.4]),
        graph_density(two_point, [1.2, 0.8]),
        t_grid=[0.25, 0.5, 0.75], N=8)
    assert rows["passed"]
