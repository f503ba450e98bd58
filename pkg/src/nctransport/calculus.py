"""First-order differential calculus for two generator families.

Backends:

* weighted graphs: tangent space is the edge space l2(X x X, b/2) with
  <xi, eta> = (1/2) sum_{x,y} b(x,y) conj(xi(x,y)) eta(x,y),
  du(x,y) = u(x) - u(y), (u.xi)(x,y) = u(x) xi(x,y),
  (xi.v)(x,y) = xi(x,y) v(y), (J xi)(x,y) = -conj(xi(y,x));

* hermitian-jump generators on matrix algebras: tangent space is a direct
  sum of copies of the algebra's L2 space, d_j a = [v_j, a], J(xi)_j = -xi_j*.

Inner products are conjugate-linear in the first slot, so the divergence
(adjoint of d) satisfies tau(a* div(xi)) = <d a, xi>.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import (AlgebraSpec, Element, HermBasis, element_from_values)
from .errors import StructuralError, ValidationError


@dataclass(frozen=True, eq=False)
class GraphSpec:
    """Weighted graph: node count, symmetric edge weights b, node measure m."""

    n: int
    b: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        m = np.asarray(self.m, dtype=float)
        if b.shape != (self.n, self.n):
            raise StructuralError(f"b has shape {b.shape}, expected ({self.n}, {self.n})")
        if m.shape != (self.n,):
            raise StructuralError(f"m has shape {m.shape}, expected ({self.n},)")
        if not np.allclose(b, b.T, atol=1e-14, rtol=1e-12):
            raise StructuralError("edge weights b must be symmetric")
        if np.any(np.diag(b) != 0):
            raise StructuralError("b must have zero diagonal")
        if np.any(b < 0):
            raise ValidationError("edge weights must be nonnegative")
        if np.any(m <= 0):
            raise ValidationError("node measure must be strictly positive")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "m", m)

    @property
    def algebra(self) -> AlgebraSpec:
        return AlgebraSpec(tuple((1, w) for w in self.m))


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    """Hermitian jump operators v_1..v_J over a matrix algebra."""

    algebra: AlgebraSpec
    jumps: tuple[Element, ...]

    def __post_init__(self):
        for v in self.jumps:
            if v.algebra != self.algebra:
                raise StructuralError("jump operator lives on a different algebra")
            if not v.is_hermitian(1e-12):
                raise ValidationError("jump operators must be hermitian")


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Backend-matching payload: an edge function or a tuple of elements."""

    backend: str
    data: object  # graph: complex (n, n) ndarray; lindblad: tuple[Element, ...]

    def __add__(self, other: "TangentVector") -> "TangentVector":
        if self.backend != other.backend:
            raise StructuralError("tangent vectors from different backends")
        if self.backend == "graph":
            return TangentVector("graph", self.data + other.data)
        return TangentVector("lindblad",
                             tuple(a + b for a, b in zip(self.data, other.data)))

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return self + (-1.0) * other

    def __mul__(self, c) -> "TangentVector":
        if self.backend == "graph":
            return TangentVector("graph", c * self.data)
        return TangentVector("lindblad", tuple(c * a for a in self.data))

    __rmul__ = __mul__


class Derivation:
    """The quintuple (d, H, left action, right action, J) for one backend."""

    def __init__(self, backend: str, spec):
        self.backend = backend
        self.spec = spec
        if backend == "graph":
            g: GraphSpec = spec
            self.algebra = g.algebra
            self.mask = g.b > 0
            iu, ju = np.nonzero(np.triu(g.b, k=1))
            self.edge_i = iu
            self.edge_j = ju
            self.edge_w = g.b[iu, ju]
            self.n_jumps = 0
        elif backend == "lindblad":
            ls: LindbladSpec = spec
            self.algebra = ls.algebra
            self.n_jumps = len(ls.jumps)
        else:
            raise ValidationError(f"unknown backend {backend!r}")
        self.basis = HermBasis(self.algebra)
        # eagerly build the generator cache so the object is immutable afterwards
        _ = self.generator

    # -- tangent vectors ------------------------------------------------------

    def _check_tangent(self, xi: TangentVector):
        if xi.backend != self.backend:
            raise StructuralError(
                f"tangent backend {xi.backend!r} != derivation backend {self.backend!r}")
        if self.backend == "graph":
            n = self.spec.n
            if np.asarray(xi.data).shape != (n, n):
                raise StructuralError("edge function has wrong shape")
        else:
            if len(xi.data) != self.n_jumps:
                raise StructuralError("tangent vector has wrong number of components")

    def zero_tangent(self) -> TangentVector:
        if self.backend == "graph":
            return TangentVector("graph", np.zeros((self.spec.n, self.spec.n), dtype=complex))
        return TangentVector("lindblad",
                             tuple(self.algebra.zero() for _ in range(self.n_jumps)))

    def mask_tangent(self, xi: TangentVector) -> TangentVector:
        """Zero out edge entries with b = 0 (they carry no mass)."""
        if self.backend == "graph":
            return TangentVector("graph", np.where(self.mask, xi.data, 0.0))
        return xi

    def random_tangent(self, rng: np.random.Generator) -> TangentVector:
        if self.backend == "graph":
            n = self.spec.n
            data = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            return TangentVector("graph", np.where(self.mask, data, 0.0))
        comps = []
        for _ in range(self.n_jumps):
            blocks = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                      for d, _ in self.algebra.blocks]
            comps.append(Element(self.algebra, tuple(blocks)))
        return TangentVector("lindblad", tuple(comps))

    # -- the calculus ---------------------------------------------------------

    def d(self, a: Element) -> TangentVector:
        if a.algebra != self.algebra:
            raise StructuralError("element lives on a different algebra")
        if self.backend == "graph":
            u = a.values()
            grad = u[:, None] - u[None, :]
            return TangentVector("graph", np.where(self.mask, grad, 0.0))
        comps = tuple(v @ a - a @ v for v in self.spec.jumps)
        return TangentVector("lindblad", comps)

    def div(self, xi: TangentVector) -> Element:
        self._check_tangent(xi)
        if self.backend == "graph":
            g = self.spec
            data = np.where(self.mask, xi.data, 0.0)
            vals = 0.5 * np.sum(g.b * (data - data.T), axis=1) / g.m
            return element_from_values(self.algebra, vals)
        out = self.algebra.zero()
        for v, comp in zip(self.spec.jumps, xi.data):
            out = out + (v @ comp - comp @ v)
        return out

    def left_act(self, a: Element, xi: TangentVector) -> TangentVector:
        self._check_tangent(xi)
        if self.backend == "graph":
            u = a.values()
            return TangentVector("graph", np.where(self.mask, u[:, None] * xi.data, 0.0))
        return TangentVector("lindblad", tuple(a @ comp for comp in xi.data))

    def right_act(self, xi: TangentVector, b: Element) -> TangentVector:
        self._check_tangent(xi)
        if self.backend == "graph":
            v = b.values()
            return TangentVector("graph", np.where(self.mask, xi.data * v[None, :], 0.0))
        return TangentVector("lindblad", tuple(comp @ b for comp in xi.data))

    def j(self, xi: TangentVector) -> TangentVector:
        self._check_tangent(xi)
        if self.backend == "graph":
            return TangentVector("graph", np.where(self.mask, -np.conj(xi.data.T), 0.0))
        return TangentVector("lindblad", tuple(-comp.star() for comp in xi.data))

    def inner(self, xi: TangentVector, eta: TangentVector) -> complex:
        """<xi, eta>_H, conjugate-linear in the first slot."""
        self._check_tangent(xi)
        self._check_tangent(eta)
        if self.backend == "graph":
            return complex(0.5 * np.sum(self.spec.b * np.conj(xi.data) * eta.data))
        total = 0.0 + 0.0j
        for a, b in zip(xi.data, eta.data):
            for (_, w), x, y in zip(self.algebra.blocks, a.blocks, b.blocks):
                total += w * np.trace(x.conj().T @ y)
        return complex(total)

    def tangent_norm(self, xi: TangentVector) -> float:
        return float(np.sqrt(max(self.inner(xi, xi).real, 0.0)))

    def energy(self, a: Element, b: Element | None = None) -> complex:
        if b is None:
            b = a
        return self.inner(self.d(a), self.d(b))

    # -- real solver coordinates ----------------------------------------------
    # Graph: antisymmetric real edge functions, one coordinate per unordered
    # edge; lindblad: anti-hermitian components, one block of coordinates per
    # jump.  Both parametrize the part of H that carries momenta of curves of
    # hermitian densities, isometrically.

    @property
    def tangent_dim(self) -> int:
        if self.backend == "graph":
            return len(self.edge_i)
        return self.n_jumps * self.basis.dim

    def tangent_coords(self, xi: TangentVector) -> np.ndarray:
        self._check_tangent(xi)
        if self.backend == "graph":
            return (xi.data[self.edge_i, self.edge_j].real
                    * np.sqrt(self.edge_w))
        out = np.empty(self.tangent_dim)
        nb = self.basis.dim
        for jx, comp in enumerate(xi.data):
            out[jx * nb:(jx + 1) * nb] = self.basis.antiherm_coords(comp.blocks)
        return out

    def tangent_from_coords(self, c: np.ndarray) -> TangentVector:
        if self.backend == "graph":
            n = self.spec.n
            data = np.zeros((n, n), dtype=complex)
            vals = c / np.sqrt(self.edge_w)
            data[self.edge_i, self.edge_j] = vals
            data[self.edge_j, self.edge_i] = -vals
            return TangentVector("graph", data)
        comps = []
        nb = self.basis.dim
        for jx in range(self.n_jumps):
            blocks = self.basis.antiherm_blocks(np.asarray(c[jx * nb:(jx + 1) * nb]))
            comps.append(Element(self.algebra, blocks))
        return TangentVector("lindblad", tuple(comps))

    @cached_property
    def div_matrix(self) -> np.ndarray:
        """Matrix of the divergence: real tangent coords -> hermitian coords."""
        nt = self.tangent_dim
        ne = self.basis.dim
        out = np.empty((ne, nt))
        for k in range(nt):
            e = np.zeros(nt)
            e[k] = 1.0
            out[:, k] = self.basis.coords(self.div(self.tangent_from_coords(e)))
        return out

    # -- generator --------------------------------------------------------------

    @cached_property
    def generator(self) -> "Generator":
        ne = self.basis.dim
        if self.backend == "graph":
            g = self.spec
            deg = np.sum(g.b, axis=1)
            inv_sqrt_m = 1.0 / np.sqrt(g.m)
            mat = (np.diag(deg) - g.b) * np.outer(inv_sqrt_m, inv_sqrt_m)
        else:
            mat = np.empty((ne, ne))
            for k in range(ne):
                e = np.zeros(ne)
                e[k] = 1.0
                a = self.basis.element(e)
                mat[:, k] = self.basis.coords(self.div(self.d(a)))
        mat = 0.5 * (mat + mat.T)
        return Generator(self, mat)


class Generator:
    """The positive self-adjoint L with E(a, b) = tau(a* L b), spectrally cached."""

    def __init__(self, derivation: Derivation, matrix: np.ndarray):
        self.derivation = derivation
        self.matrix = matrix
        vals, vecs = np.linalg.eigh(matrix)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if float(np.min(vals)) < -1e-10 * scale:
            raise ValidationError(
                f"generator has negative eigenvalue {float(np.min(vals)):.3e}")
        self.eigvals = np.clip(vals, 0.0, None)
        self.eigvecs = vecs

    @property
    def spectrum(self) -> np.ndarray:
        return self.eigvals

    def kernel_dim(self, tol: float = 1e-10) -> int:
        scale = max(1.0, float(np.max(self.eigvals)))
        return int(np.sum(self.eigvals <= tol * scale))

    def is_irreducible(self) -> bool:
        return self.kernel_dim() == 1

    def apply_coords(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def heat_coords(self, v: np.ndarray, t: float) -> np.ndarray:
        w = self.eigvecs.T @ v
        return self.eigvecs @ (np.exp(-t * self.eigvals) * w)

    def apply(self, x: Element) -> Element:
        return self._lift(x, self.apply_coords)

    def heat(self, x: Element, t: float) -> Element:
        if t < 0:
            raise ValidationError("heat flow requires t >= 0")
        return self._lift(x, lambda v: self.heat_coords(v, t))

    def _lift(self, x: Element, f) -> Element:
        basis = self.derivation.basis
        h = x.hermitian_part()
        k = (x - h) * (-1j)  # anti-hermitian part as a hermitian element
        out = basis.element(f(basis.coords(h)))
        if max(np.linalg.norm(b) for b in k.blocks) > 1e-14 * max(
                1e-300, max(np.linalg.norm(b) for b in x.blocks)):
            out = out + 1j * basis.element(f(basis.coords(k)))
        return out


# -- module-level API mirroring the operation names ------------------------------

def graph_calculus(g: GraphSpec) -> Derivation:
    return Derivation("graph", g)


def lindblad_calculus(spec: LindbladSpec) -> Derivation:
    return Derivation("lindblad", spec)


def apply_derivation(d: Derivation, a: Element) -> TangentVector:
    return d.d(a)


def divergence(d: Derivation, xi: TangentVector) -> Element:
    return d.div(xi)


def left_act(d: Derivation, a: Element, xi: TangentVector) -> TangentVector:
    return d.left_act(a, xi)


def right_act(d: Derivation, xi: TangentVector, b: Element) -> TangentVector:
    return d.right_act(xi, b)


def j_involution(d: Derivation, xi: TangentVector) -> TangentVector:
    return d.j(xi)


def dirichlet_energy(d: Derivation, a: Element, b: Element | None = None):
    val = d.energy(a, b)
    if b is None or b is a:
        return float(val.real)
    return val


def generator_operator(d: Derivation) -> Generator:
    return d.generator
