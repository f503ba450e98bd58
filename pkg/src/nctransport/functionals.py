"""Entropy, Fisher information, carre du champ, seminorms, trace inequalities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .algebra import (AlgebraSpec, Density, Element, density_eig, eigh_element,
                      functional_calculus, inner, lp_norm, trace)
from .calculus import Derivation, TangentVector
from .errors import PreconditionError, ValidationError
from .means import (MeanKind, _as_kind, mean_quad_form, mean_quad_form_grad,
                    rho_hat_apply, _theta)

_ZERO_EIG_REL = 1e-12   # relative eigenvalue threshold for "zero"
_KERNEL_MASS_REL = 1e-10  # relative tangent-mass threshold for infinity


def entropy(algebra: AlgebraSpec, rho: Element) -> float:
    """tau(rho log rho) with 0 log 0 = 0."""
    t = trace(algebra, rho)
    if abs(t - 1.0) > 1e-8:
        raise PreconditionError(f"entropy needs a unit-trace density, tau = {t}")
    vals, _ = density_eig(rho)
    total = 0.0
    for (_, w), lam in zip(algebra.blocks, vals):
        pos = lam[lam > 0]
        total += w * float(np.sum(pos * np.log(pos)))
    return total


@dataclass(frozen=True)
class FisherValue:
    value: float
    finite: bool
    kernel_mass: float = 0.0

    def __float__(self):
        return self.value


def fisher_information(d: Derivation, rho: Element) -> FisherValue:
    """E(rho, log rho) via multipliers 1/LM; +inf when d(rho) has mass on
    pairs with a zero eigenvalue (relative thresholds 1e-12 / 1e-10)."""
    drho = d.d(rho)
    norm_drho = d.tangent_norm(drho)
    if norm_drho == 0.0:
        return FisherValue(0.0, True, 0.0)
    if d.backend == "graph":
        vals = np.clip(rho.values().real, 0.0, None)
        scale = max(float(np.max(vals)), 1e-300)
        lm = _theta(MeanKind.LOGARITHMIC, vals[:, None], vals[None, :])
        zero_pair = (np.minimum(vals[:, None], vals[None, :]) <= _ZERO_EIG_REL * scale)
        absq = np.abs(drho.data) ** 2 * d.mask
        kernel_sq = float(0.5 * np.sum(d.spec.b * zero_pair * absq))
        good = d.mask & ~zero_pair
        value = float(0.5 * np.sum(np.where(good, d.spec.b * absq
                                            / np.where(good, lm, 1.0), 0.0)))
    else:
        vals, vecs = density_eig(rho)
        scale = max(max(float(np.max(v)) for v in vals), 1e-300)
        kernel_sq = 0.0
        value = 0.0
        for comp in drho.data:
            for (dim_w, lam, u, blk) in zip(d.algebra.blocks, vals, vecs, comp.blocks):
                _, w = dim_w
                tilde = u.conj().T @ blk @ u
                lm = _theta(MeanKind.LOGARITHMIC, lam[:, None], lam[None, :])
                zero_pair = (np.minimum(lam[:, None], lam[None, :])
                             <= _ZERO_EIG_REL * scale)
                absq = np.abs(tilde) ** 2
                kernel_sq += w * float(np.sum(absq[zero_pair]))
                good = ~zero_pair
                value += w * float(np.sum(absq[good] / lm[good]))
    kernel_mass = float(np.sqrt(kernel_sq))
    if kernel_mass > _KERNEL_MASS_REL * norm_drho:
        return FisherValue(np.inf, False, kernel_mass)
    return FisherValue(value, True, kernel_mass)


def carre_du_champ(d: Derivation, a: Element) -> Element:
    """The element Gamma(a) with tau(x Gamma(a)) = <d a, x . d a>_H."""
    if d.backend == "graph":
        g = d.spec
        u = a.values()
        diff2 = np.abs(u[:, None] - u[None, :]) ** 2
        vals = 0.5 * np.sum(g.b * diff2, axis=1) / g.m
        from .algebra import element_from_values
        return element_from_values(d.algebra, vals)
    out = d.algebra.zero()
    for comp in d.d(a).data:
        out = out + comp @ comp.star()
    return out


def am_seminorm(d: Derivation, a: Element) -> float:
    """||a||_AM = sqrt( (1/2) || Gamma(a) + Gamma(a*) ||_inf )."""
    g = carre_du_champ(d, a) + carre_du_champ(d, a.star())
    top = max(float(np.max(np.linalg.eigvalsh(0.5 * (blk + blk.conj().T))))
              for blk in g.blocks)
    return float(np.sqrt(max(0.5 * top, 0.0)))


@dataclass(frozen=True)
class SeminormResult:
    value: float
    maximizer: Density
    gap: float
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


def theta_seminorm(kind, d: Derivation, a: Element, max_iter: int = 400,
                   tol: float = 1e-6) -> SeminormResult:
    """sup over densities of ||d a||_rho, by conditional gradient.

    The objective rho -> <rho-hat d a, d a> is concave on the density set,
    whose extreme points are weighted rank-one projections: the linear
    maximization oracle is a top-eigenvector computation.  Returns a certified
    lower bound with the final Frank-Wolfe gap.
    """
    kind = _as_kind(kind)
    algebra = d.algebra
    xi = d.d(a)
    tau1 = algebra.trace_of_identity
    rho = Density.from_element(algebra.identity() * (1.0 / tau1))
    if d.tangent_norm(xi) == 0.0:
        return SeminormResult(0.0, rho, 0.0, True, 0)
    basis = d.basis
    q = 0.0
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        q, grad_coords = mean_quad_form_grad(kind, d, rho, xi, 0.0)
        grad_elem = basis.element(grad_coords)
        # linear oracle: max tau(G sigma) over densities is the top (unweighted)
        # eigenvalue of a block; maximizer = v v* / weight in that block
        best_val, best_block, best_vec = -np.inf, 0, None
        for bi, blk in enumerate(grad_elem.blocks):
            lam, u = np.linalg.eigh(0.5 * (blk + blk.conj().T))
            if lam[-1] > best_val:
                best_val, best_block, best_vec = float(lam[-1]), bi, u[:, -1]
        vertex_blocks = [np.zeros((dd, dd), dtype=complex) for dd, _ in algebra.blocks]
        w_b = algebra.blocks[best_block][1]
        vertex_blocks[best_block] = np.outer(best_vec, best_vec.conj()) / w_b
        vertex = Element(algebra, tuple(vertex_blocks))
        gap = float(trace(algebra, grad_elem @ (vertex - rho)))
        if gap <= tol * max(q, 1e-300):
            return SeminormResult(float(np.sqrt(max(q, 0.0))), rho, gap, True, it)
        gamma = 2.0 / (it + 2.0)
        rho = Density.from_element((1.0 - gamma) * rho + gamma * vertex)
    q = mean_quad_form(kind, d, rho, xi, 0.0)
    return SeminormResult(float(np.sqrt(max(q, 0.0))), rho, gap, False, it)


def entropy_variational_gap(algebra: AlgebraSpec, rho: Element, a: Element) -> float:
    """Ent(rho) - [tau(a rho) - log tau(e^a)] >= 0 for positive a, tau(1) = 1."""
    if abs(algebra.trace_of_identity - 1.0) > 1e-10:
        raise PreconditionError("variational entropy bound needs tau(1) = 1")
    vals, _ = eigh_element(a)
    low = min(float(np.min(v)) for v in vals)
    scale = max(1.0, max(float(np.max(np.abs(v))) for v in vals))
    if low < -1e-12 * scale:
        raise PreconditionError("test element a must be positive semidefinite")
    ea = functional_calculus(algebra, a, np.exp)
    return (entropy(algebra, rho)
            - float(trace(algebra, (a @ rho).hermitian_part()).real)
            + float(np.log(trace(algebra, ea))))


def klein_gap(algebra: AlgebraSpec, f, fprime, rho0: Element, rho1: Element) -> float:
    """tau(f'(rho1)(rho1 - rho0)) - tau(f(rho1) - f(rho0)) >= 0 for convex f."""
    fp1 = functional_calculus(algebra, rho1, fprime)
    lhs = trace(algebra, (fp1 @ (rho1 - rho0)).hermitian_part())
    rhs = trace(algebra, functional_calculus(algebra, rho1, f)) \
        - trace(algebra, functional_calculus(algebra, rho0, f))
    return float(lhs - rhs)


def connes_lower_bound(d: Derivation, rho: Element, sigma: Element,
                       budget: int = 200, seed: int = 0) -> float:
    """Lower bound on sup{ |tau(a (rho - sigma))| : ||a||_AM <= 1 }.

    Maximizes the scale-invariant ratio |tau(a delta)| / ||a||_AM over
    hermitian a via seeded multi-start quasi-Newton ascent; any feasible a
    yields a certified lower bound.
    """
    algebra = d.algebra
    basis = d.basis
    delta = (rho - sigma).hermitian_part()
    cdelta = basis.coords(delta)
    if np.linalg.norm(cdelta) <= 1e-15:
        return 0.0

    def ratio(g: np.ndarray) -> float:
        a = basis.element(g)
        den = am_seminorm(d, a)
        if den <= 1e-14:
            return 0.0
        return abs(float(cdelta @ g)) / den

    rng = np.random.default_rng(seed)
    starts = [cdelta / np.linalg.norm(cdelta)]
    for _ in range(3):
        v = rng.standard_normal(basis.dim)
        starts.append(v / np.linalg.norm(v))
    best = 0.0
    maxiter = max(10, budget // (len(starts)))
    for g0 in starts:
        res = optimize.minimize(lambda g: -ratio(g), g0, method="Nelder-Mead",
                                options={"maxiter": maxiter * basis.dim,
                                         "xatol": 1e-10, "fatol": 1e-12})
        best = max(best, ratio(res.x))
    return float(best)
