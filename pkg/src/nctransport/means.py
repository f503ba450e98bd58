"""Operator means theta and the operator rho-hat = theta(L(rho), R(rho)).

rho-hat acts on tangent vectors through eigenbasis conjugation plus Hadamard
multiplication by the table theta(lambda_k, lambda_l) (for graphs: pointwise
multiplication by theta(rho(x), rho(y)) on edges); it is never materialized
as a dim(H)^2 operator.  The same machinery powers divided-difference
(chain-rule) multipliers and the quadratic forms used by the transport solver.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable

import numpy as np

from .algebra import Element, density_eig
from .calculus import Derivation, TangentVector
from .errors import DomainError, SingularityError, ValidationError

_CLOSE_REL = 1e-8            # midpoint-derivative branch threshold
_SOLVE_CUTOFF = 1e-12        # relative multiplier cutoff for pseudo-inverse
_KERNEL_MASS = 1e-9          # relative kernel-mass threshold for strict solves


class MeanKind(str, Enum):
    ARITHMETIC = "am"
    LOGARITHMIC = "lm"
    GEOMETRIC = "gm"
    HARMONIC = "hm"


def _as_kind(kind) -> MeanKind:
    if isinstance(kind, MeanKind):
        return kind
    return MeanKind(str(kind).lower())


def _theta(kind: MeanKind, s, t):
    """Vectorized mean on nonnegative arrays, with continuous boundary limits."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if kind == MeanKind.ARITHMETIC:
        return 0.5 * (s + t)
    if kind == MeanKind.GEOMETRIC:
        return np.sqrt(s * t)
    if kind == MeanKind.HARMONIC:
        tot = s + t
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(tot > 0, 2.0 * s * t / np.where(tot > 0, tot, 1.0), 0.0)
        return out
    # logarithmic mean
    pos = (s > 0) & (t > 0)
    close = np.abs(s - t) <= _CLOSE_REL * np.maximum(s, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = s - t
        den = np.log(np.where(pos, s, 1.0)) - np.log(np.where(pos, t, 1.0))
        safe = pos & ~close
        ratio = np.where(safe, num / np.where(safe, den, 1.0), 0.0)
    return np.where(pos, np.where(close, 0.5 * (s + t), ratio), 0.0)


def _theta_partials(kind: MeanKind, s, t):
    """(d theta/ds, d theta/dt) for strictly positive arguments (clamped)."""
    s = np.maximum(np.asarray(s, dtype=float), 1e-150)
    t = np.maximum(np.asarray(t, dtype=float), 1e-150)
    if kind == MeanKind.ARITHMETIC:
        half = np.full(np.broadcast(s, t).shape, 0.5)
        return half, half.copy()
    if kind == MeanKind.GEOMETRIC:
        return 0.5 * np.sqrt(t / s), 0.5 * np.sqrt(s / t)
    if kind == MeanKind.HARMONIC:
        tot = (s + t) ** 2
        return 2.0 * t * t / tot, 2.0 * s * s / tot
    close = np.abs(s - t) <= 1e-6 * np.maximum(s, t)
    ell = np.log(s) - np.log(t)
    ell_safe = np.where(close, 1.0, ell)
    d1 = np.where(close, 0.5 - (s - t) / (6.0 * t), (ell - (s - t) / s) / ell_safe ** 2)
    d2 = np.where(close, 0.5 - (t - s) / (6.0 * s), ((s - t) / t - ell) / ell_safe ** 2)
    return d1, d2


def mean_value(kind, s, t) -> float:
    kind = _as_kind(kind)
    if np.any(np.asarray(s) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("means are defined for nonnegative arguments")
    out = _theta(kind, s, t)
    return float(out) if np.isscalar(s) and np.isscalar(t) else out


# -- multiplier application ------------------------------------------------------

def _graph_density_values(d: Derivation, rho: Element) -> np.ndarray:
    vals = rho.values().real
    return np.clip(vals, 0.0, None)


def _apply_graph_table(d: Derivation, table: np.ndarray, xi: TangentVector) -> TangentVector:
    return TangentVector("graph", np.where(d.mask, table * xi.data, 0.0))


def _apply_block_table(d: Derivation, rho: Element, xi: TangentVector,
                       table_fn: Callable, clamp: bool = True) -> TangentVector:
    """Conjugate into rho's eigenbasis, Hadamard-multiply, conjugate back."""
    if clamp:
        vals, vecs = density_eig(rho)
    else:
        from .algebra import eigh_element
        vals, vecs = eigh_element(rho)
    comps = []
    for comp in xi.data:
        blocks = []
        for lam, u, blk in zip(vals, vecs, comp.blocks):
            tilde = u.conj().T @ blk @ u
            blocks.append(u @ (table_fn(lam[:, None], lam[None, :]) * tilde) @ u.conj().T)
        comps.append(Element(d.algebra, tuple(blocks)))
    return TangentVector("lindblad", tuple(comps))


def _apply_table(d: Derivation, rho: Element, xi: TangentVector,
                 table_fn: Callable) -> TangentVector:
    d._check_tangent(xi)
    if d.backend == "graph":
        vals = _graph_density_values(d, rho)
        return _apply_graph_table(d, table_fn(vals[:, None], vals[None, :]), xi)
    return _apply_block_table(d, rho, xi, table_fn)


def rho_hat_apply(kind, rho: Element, d: Derivation, xi: TangentVector) -> TangentVector:
    kind = _as_kind(kind)
    return _apply_table(d, rho, xi, lambda s, t: _theta(kind, s, t))


def rho_hat_solve(kind, rho: Element, d: Derivation, m: TangentVector,
                  mode: str = "strict", eps: float | None = None) -> TangentVector:
    """Solve rho-hat xi = m.

    strict: pseudo-inverse with relative multiplier cutoff 1e-12; raises
    SingularityError when m carries kernel mass > 1e-9 * ||m|| (the action
    <m, rho-hat^{-1} m> is +inf there).  tikhonov: multipliers theta + eps.
    """
    kind = _as_kind(kind)
    d._check_tangent(m)
    if mode == "tikhonov":
        if eps is None or eps <= 0:
            raise ValidationError("tikhonov mode needs eps > 0")
        return _apply_table(d, rho, m, lambda s, t: 1.0 / (_theta(kind, s, t) + eps))
    if mode != "strict":
        raise ValidationError(f"unknown solve mode {mode!r}")

    # strict pseudo-inverse with kernel-mass detection
    norm_m = d.tangent_norm(m)
    kernel_sq = 0.0
    if d.backend == "graph":
        vals = _graph_density_values(d, rho)
        table = _theta(kind, vals[:, None], vals[None, :])
        cutoff = _SOLVE_CUTOFF * max(float(np.max(table)), 1e-300)
        small = (table < cutoff) & d.mask
        kernel_sq = float(0.5 * np.sum(d.spec.b * small * np.abs(m.data) ** 2))
        inv = np.where(table >= cutoff, 1.0 / np.where(table >= cutoff, table, 1.0), 0.0)
        out = _apply_graph_table(d, inv, m)
    else:
        vals, vecs = density_eig(rho)
        max_mult = 0.0
        tables = []
        for lam in vals:
            tb = _theta(kind, lam[:, None], lam[None, :])
            tables.append(tb)
            if tb.size:
                max_mult = max(max_mult, float(np.max(tb)))
        cutoff = _SOLVE_CUTOFF * max(max_mult, 1e-300)
        comps = []
        for comp in m.data:
            blocks = []
            for (dim_w, tb, u, blk) in zip(d.algebra.blocks, tables, vecs, comp.blocks):
                _, w = dim_w
                tilde = u.conj().T @ blk @ u
                small = tb < cutoff
                kernel_sq += w * float(np.sum(np.abs(tilde[small]) ** 2))
                inv = np.where(small, 0.0, 1.0 / np.where(small, 1.0, tb))
                blocks.append(u @ (inv * tilde) @ u.conj().T)
            comps.append(Element(d.algebra, tuple(blocks)))
        out = TangentVector("lindblad", tuple(comps))
    if np.sqrt(kernel_sq) > _KERNEL_MASS * max(norm_m, 1e-300):
        raise SingularityError(
            f"kernel mass {np.sqrt(kernel_sq):.3e} exceeds {_KERNEL_MASS:.0e} * ||m||")
    return out


def rho_norm(kind, rho: Element, d: Derivation, xi: TangentVector) -> float:
    val = d.inner(xi, rho_hat_apply(kind, rho, d, xi)).real
    return float(np.sqrt(max(val, 0.0)))


def divided_difference_apply(f: Callable, a: Element, d: Derivation,
                             xi: TangentVector, fprime: Callable | None = None) -> TangentVector:
    """Apply the multiplier table (f(s)-f(t))/(s-t), midpoint branch near s=t."""
    if fprime is None:
        def fprime(x, _f=f):
            h = 1e-6 * max(1.0, abs(x))
            return (_f(x + h) - _f(x - h)) / (2.0 * h)

    def table(s, t):
        shape = np.broadcast(np.asarray(s), np.asarray(t)).shape
        s = np.broadcast_to(np.asarray(s, dtype=float), shape)
        t = np.broadcast_to(np.asarray(t, dtype=float), shape)
        close = np.abs(s - t) < _CLOSE_REL * np.maximum(
            1.0, np.maximum(np.abs(s), np.abs(t)))
        out = np.empty(shape)
        vec_f = np.vectorize(f, otypes=[float])
        vec_fp = np.vectorize(fprime, otypes=[float])
        with np.errstate(all="raise"):
            try:
                if np.any(close):
                    out[close] = vec_fp(0.5 * (s[close] + t[close]))
                far = ~close
                if np.any(far):
                    out[far] = (vec_f(s[far]) - vec_f(t[far])) / (s[far] - t[far])
            except (FloatingPointError, ValueError, ZeroDivisionError) as exc:
                raise DomainError(
                    f"function or derivative undefined on spectrum: {exc}") from exc
        return out

    if d.backend == "graph":
        vals = a.values().real
        return _apply_graph_table(d, table(vals[:, None], vals[None, :]), xi)
    return _apply_block_table(d, a, xi, table, clamp=False)


# -- quadratic forms for the solver and seminorm --------------------------------
#
# q(eta; mu) = <rho-hat_mu eta, eta> with multipliers optionally floored UP at
# `floor` (continuation smoothing: keeps the weighted Laplacian full-range on
# trace-zero elements and the objective smooth near the boundary).

def _floored(table: np.ndarray, floor: float) -> np.ndarray:
    return np.maximum(table, floor) if floor > 0 else table


def mean_matrix(kind, d: Derivation, mu: Element, floor: float = 0.0):
    """rho-hat_mu in real tangent coordinates.

    Returns ("diag", vector) for graphs, ("dense", matrix) otherwise.
    """
    kind = _as_kind(kind)
    if d.backend == "graph":
        vals = _graph_density_values(d, mu)
        mult = _floored(_theta(kind, vals[d.edge_i], vals[d.edge_j]), floor)
        return "diag", mult
    vals, vecs = density_eig(mu)
    nb = d.basis.dim
    per_block = np.zeros((nb, nb))
    # real-linear matrix of the multiplier map on anti-hermitian coordinates
    col = np.zeros(nb)
    for k in range(nb):
        col[:] = 0.0
        col[k] = 1.0
        blocks = d.basis.antiherm_blocks(col)
        out_blocks = []
        for lam, u, blk in zip(vals, vecs, blocks):
            lam = np.clip(lam, 0.0, None)
            tb = _floored(_theta(kind, lam[:, None], lam[None, :]), floor)
            tilde = u.conj().T @ blk @ u
            out_blocks.append(u @ (tb * tilde) @ u.conj().T)
        per_block[:, k] = d.basis.antiherm_coords(tuple(out_blocks))
    per_block = 0.5 * (per_block + per_block.T)
    if d.n_jumps == 1:
        return "dense", per_block
    return "dense", np.kron(np.eye(d.n_jumps), per_block)


def _as_tangent(d: Derivation, eta) -> TangentVector:
    if isinstance(eta, TangentVector):
        return eta
    return d.tangent_from_coords(np.asarray(eta, dtype=float))


def mean_quad_form(kind, d: Derivation, mu: Element, eta,
                   floor: float = 0.0) -> float:
    """q(eta; mu) = <rho-hat_mu eta, eta> with floored multipliers.

    eta may be a TangentVector or a real tangent-coordinate vector.
    """
    kind = _as_kind(kind)
    eta = _as_tangent(d, eta)
    if d.backend == "graph":
        vals = _graph_density_values(d, mu)
        tb = _floored(_theta(kind, vals[:, None], vals[None, :]), floor)
        return float(0.5 * np.sum(d.spec.b * tb * np.abs(eta.data) ** 2))
    vals, vecs = density_eig(mu)
    total = 0.0
    for comp in eta.data:
        for (dim_w, lam, u, blk) in zip(d.algebra.blocks, vals, vecs, comp.blocks):
            _, w = dim_w
            lam = np.clip(lam, 0.0, None)
            tb = _floored(_theta(kind, lam[:, None], lam[None, :]), floor)
            tilde = u.conj().T @ blk @ u
            total += w * float(np.sum(tb * np.abs(tilde) ** 2))
    return total


def mean_quad_form_grad(kind, d: Derivation, mu: Element, eta,
                        floor: float = 0.0) -> tuple[float, np.ndarray]:
    """(q, dq/dmu) with the gradient in orthonormal hermitian coordinates.

    Graph backend: closed-form partial derivatives of theta.  Matrix backend:
    central finite differences coordinate-by-coordinate (blocks are tiny and
    q is smooth in mu, so the FD error is ~1e-10; callers that optimize check
    objective decrease directly, making this safe).
    """
    kind = _as_kind(kind)
    eta = _as_tangent(d, eta)
    basis = d.basis
    if d.backend == "graph":
        vals = _graph_density_values(d, mu)
        theta = _theta(kind, vals[:, None], vals[None, :])
        active = theta > floor if floor > 0 else np.ones_like(theta, dtype=bool)
        mult = _floored(theta, floor)
        absq = np.abs(eta.data) ** 2 * d.mask
        q = float(0.5 * np.sum(d.spec.b * mult * absq))
        d1, _ = _theta_partials(kind, vals[:, None], vals[None, :])
        # theta symmetric: d2 theta(rho_y, rho_x) = d1 theta(rho_x, rho_y)
        contrib = 0.5 * d.spec.b * d1 * active * (absq + absq.T)
        grad_nodes = np.sum(contrib, axis=1)
        # node values live at coords[x] = rho(x) * sqrt(m(x))
        return q, grad_nodes / np.sqrt(d.spec.m)
    mu_coords = basis.coords(mu)
    q = mean_quad_form(kind, d, mu, eta, floor)
    grad = np.zeros(basis.dim)
    h = 1e-5 * max(1.0, float(np.max(np.abs(mu_coords))))
    for i in range(basis.dim):
        step = np.zeros(basis.dim)
        step[i] = h
        qp = mean_quad_form(kind, d, basis.element(mu_coords + step), eta, floor)
        qm = mean_quad_form(kind, d, basis.element(mu_coords - step), eta, floor)
        grad[i] = (qp - qm) / (2.0 * h)
    return q, grad
