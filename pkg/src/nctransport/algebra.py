"""Finite direct sums of matrix blocks with a weighted trace.

An algebra instance is a list of (dim, weight) blocks; the trace of an
element x = (x_1, ..., x_B) is tau(x) = sum_i weight_i * tr(x_i) with tr the
unnormalized matrix trace.  A commutative instance (functions on a finite
measure space) is encoded as dim-1 blocks whose weights are the measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, StructuralError, ValidationError

_EIG_CLAMP = 1e-12


@dataclass(frozen=True)
class AlgebraSpec:
    """Direct sum of full matrix blocks with strictly positive trace weights."""

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self):
        blocks = tuple((int(d), float(w)) for d, w in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        for d, w in blocks:
            if d < 1:
                raise ValidationError(f"block dimension must be >= 1, got {d}")
            if not w > 0:
                raise ValidationError(f"block weight must be > 0, got {w}")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.blocks)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.blocks)

    @property
    def trace_of_identity(self) -> float:
        return float(sum(w * d for d, w in self.blocks))

    @property
    def herm_dim(self) -> int:
        """Real dimension of the space of hermitian elements."""
        return int(sum(d * d for d, _ in self.blocks))

    def identity(self) -> "Element":
        return Element(self, tuple(np.eye(d, dtype=complex) for d, _ in self.blocks))

    def zero(self) -> "Element":
        return Element(self, tuple(np.zeros((d, d), dtype=complex) for d, _ in self.blocks))

    def is_commutative(self) -> bool:
        return all(d == 1 for d, _ in self.blocks)


def _check_blocks(algebra: AlgebraSpec, blocks: Sequence[np.ndarray]) -> tuple[np.ndarray, ...]:
    if len(blocks) != algebra.n_blocks:
        raise StructuralError(
            f"expected {algebra.n_blocks} blocks, got {len(blocks)}")
    out = []
    for (d, _), blk in zip(algebra.blocks, blocks):
        arr = np.asarray(blk, dtype=complex)
        if arr.shape != (d, d):
            raise StructuralError(f"block shape {arr.shape} != ({d}, {d})")
        out.append(arr)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Element:
    """A block operator affiliated with an AlgebraSpec."""

    algebra: AlgebraSpec
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", _check_blocks(self.algebra, self.blocks))

    # -- algebraic operations -------------------------------------------------

    def _same(self, other: "Element"):
        if self.algebra != other.algebra:
            raise StructuralError("elements live on different algebras")

    def __add__(self, other: "Element") -> "Element":
        self._same(other)
        return Element(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "Element") -> "Element":
        self._same(other)
        return Element(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> "Element":
        return Element(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, c) -> "Element":
        return Element(self.algebra, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other: "Element") -> "Element":
        self._same(other)
        return Element(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def star(self) -> "Element":
        """Adjoint (conjugate transpose per block)."""
        return Element(self.algebra, tuple(a.conj().T for a in self.blocks))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for a in self.blocks:
            scale = max(1.0, np.linalg.norm(a, 2))
            if np.linalg.norm(a - a.conj().T, 2) > tol * scale:
                return False
        return True

    def hermitian_part(self) -> "Element":
        return Element(self.algebra, tuple(0.5 * (a + a.conj().T) for a in self.blocks))

    def norm_inf(self) -> float:
        return max(np.linalg.norm(a, 2) for a in self.blocks)

    def values(self) -> np.ndarray:
        """For commutative algebras: the vector of scalar block values."""
        if not self.algebra.is_commutative():
            raise StructuralError("values() requires a commutative algebra")
        return np.array([blk[0, 0] for blk in self.blocks])


def element_from_values(algebra: AlgebraSpec, values: Sequence[complex]) -> Element:
    """Inverse of Element.values() for commutative algebras."""
    if not algebra.is_commutative():
        raise StructuralError("element_from_values requires a commutative algebra")
    vals = np.asarray(values, dtype=complex)
    if vals.shape != (algebra.n_blocks,):
        raise StructuralError(f"expected {algebra.n_blocks} values, got {vals.shape}")
    return Element(algebra, tuple(np.array([[v]]) for v in vals))


# -- trace, norms, functional calculus ----------------------------------------

def trace(algebra: AlgebraSpec, x: Element):
    if x.algebra != algebra:
        raise StructuralError("element does not belong to the given algebra")
    t = sum(w * np.trace(blk) for (_, w), blk in zip(algebra.blocks, x.blocks))
    if abs(t.imag) <= 1e-12 * max(1.0, abs(t.real)):
        return float(t.real)
    return complex(t)


def inner(algebra: AlgebraSpec, x: Element, y: Element) -> complex:
    """tau(x* y); conjugate-linear in the first slot."""
    return complex(sum(w * np.trace(a.conj().T @ b)
                       for (_, w), a, b in zip(algebra.blocks, x.blocks, y.blocks)))


def l2_norm(algebra: AlgebraSpec, x: Element) -> float:
    return float(np.sqrt(max(inner(algebra, x, x).real, 0.0)))


def lp_norm(algebra: AlgebraSpec, x: Element, p) -> float:
    if x.algebra != algebra:
        raise StructuralError("element does not belong to the given algebra")
    if p == np.inf or p == "inf":
        return x.norm_inf()
    p = float(p)
    if p < 1:
        raise ValidationError(f"p must be in [1, inf], got {p}")
    total = 0.0
    for (_, w), blk in zip(algebra.blocks, x.blocks):
        s = np.linalg.svd(blk, compute_uv=False)
        total += w * float(np.sum(s ** p))
    return total ** (1.0 / p)


def eigh_element(x: Element) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Per-block eigendecomposition of a hermitian element."""
    if not x.is_hermitian(1e-10):
        raise ValidationError("eigendecomposition requires a hermitian element")
    vals, vecs = [], []
    for blk in x.blocks:
        lam, u = np.linalg.eigh(0.5 * (blk + blk.conj().T))
        vals.append(lam)
        vecs.append(u)
    return tuple(vals), tuple(vecs)


def functional_calculus(algebra: AlgebraSpec, x: Element, f: Callable) -> Element:
    """Apply a scalar function to a hermitian element via spectral calculus."""
    vals, vecs = eigh_element(x)
    out = []
    scale = max(1.0, max(float(np.max(np.abs(v))) for v in vals))
    for lam, u in zip(vals, vecs):
        # tolerance-widened domain: eigenvalues within 1e-12 of 0 snap to 0
        lam_eval = np.where(np.abs(lam) <= _EIG_CLAMP * scale, 0.0, lam)
        with np.errstate(all="raise"):
            try:
                flam = np.array([f(v) for v in lam_eval], dtype=complex)
            except (FloatingPointError, ValueError, ZeroDivisionError) as exc:
                raise DomainError(f"function undefined on spectrum: {exc}") from exc
        if not np.all(np.isfinite(flam)):
            raise DomainError("function not finite on the spectrum")
        out.append((u * flam) @ u.conj().T)
    return Element(algebra, tuple(out))


# -- densities -----------------------------------------------------------------

class Density(Element):
    """Positive unit-trace element with a cached spectral decomposition."""

    eigvals: tuple[np.ndarray, ...]
    eigvecs: tuple[np.ndarray, ...]

    def __init__(self, algebra: AlgebraSpec, blocks: Sequence[np.ndarray]):
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "blocks", _check_blocks(algebra, blocks))
        vals, vecs = eigh_element(self)
        scale = max(1.0, max(float(np.max(np.abs(v))) for v in vals))
        clamped = []
        for lam in vals:
            if float(np.min(lam)) < -_EIG_CLAMP * scale:
                raise ValidationError(
                    f"density has negative eigenvalue {float(np.min(lam)):.3e}")
            clamped.append(np.clip(lam, 0.0, None))
        vals = tuple(clamped)
        # re-symmetrize against the clamped spectrum
        blocks = tuple((u * lam) @ u.conj().T for lam, u in zip(vals, vecs))
        object.__setattr__(self, "blocks", _check_blocks(algebra, blocks))
        t = trace(algebra, self)
        if abs(t - 1.0) > 1e-10:
            raise ValidationError(f"density trace {t} != 1")
        object.__setattr__(self, "eigvals", vals)
        object.__setattr__(self, "eigvecs", vecs)

    @classmethod
    def from_element(cls, x: Element) -> "Density":
        return cls(x.algebra, x.blocks)

    def min_eigenvalue(self) -> float:
        return min(float(np.min(lam)) for lam in self.eigvals)


def density_eig(rho: Element):
    """Eigendata of a positive hermitian element, using the cache if present."""
    if isinstance(rho, Density):
        return rho.eigvals, rho.eigvecs
    vals, vecs = eigh_element(rho)
    return tuple(np.clip(v, 0.0, None) for v in vals), vecs


def regularize_density(rho: Element, eps: float) -> Density:
    """(rho + eps)/(tau(rho) + eps*tau(1)): pushes the spectrum off zero."""
    algebra = rho.algebra
    if eps < 0 or eps * algebra.trace_of_identity >= 1:
        raise ValidationError("need 0 <= eps * tau(1) < 1")
    if eps == 0:
        return rho if isinstance(rho, Density) else Density.from_element(rho)
    t = trace(algebra, rho)
    one = algebra.identity()
    scaled = (rho + eps * one) * (1.0 / (t + eps * algebra.trace_of_identity))
    return Density.from_element(scaled)


def random_element(algebra: AlgebraSpec, rng: np.random.Generator,
                   hermitian: bool = True) -> Element:
    blocks = []
    for d, _ in algebra.blocks:
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        if hermitian:
            a = 0.5 * (a + a.conj().T)
        blocks.append(a)
    return Element(algebra, tuple(blocks))


def random_density(algebra: AlgebraSpec, seed, floor: float = 0.0) -> Density:
    """Deterministic random density with min eigenvalue >= floor."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    blocks = []
    for d, _ in algebra.blocks:
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        blocks.append(g @ g.conj().T)
    x = Element(algebra, tuple(blocks))
    x = x * (1.0 / trace(algebra, x))
    return regularize_density(x, floor)


# -- orthonormal real coordinates on hermitian elements -------------------------

@dataclass(frozen=True)
class HermBasis:
    """Orthonormal real coordinates for hermitian elements w.r.t. tau(x y)."""

    algebra: AlgebraSpec
    # per block: (diag scale, offdiag scale) derived from the weight
    _offsets: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        offsets = [0]
        for d, _ in self.algebra.blocks:
            offsets.append(offsets[-1] + d * d)
        object.__setattr__(self, "_offsets", tuple(offsets))

    @property
    def dim(self) -> int:
        return self._offsets[-1]

    def coords(self, x: Element) -> np.ndarray:
        out = np.empty(self.dim)
        pos = 0
        for (d, w), blk in zip(self.algebra.blocks, x.blocks):
            sw = np.sqrt(w)
            out[pos:pos + d] = np.diag(blk).real * sw
            pos += d
            if d > 1:
                iu, ju = np.triu_indices(d, k=1)
                vals = blk[iu, ju]
                s2w = np.sqrt(2.0 * w)
                n_off = len(iu)
                out[pos:pos + n_off] = vals.real * s2w
                out[pos + n_off:pos + 2 * n_off] = vals.imag * s2w
                pos += 2 * n_off
        return out

    def element(self, v: np.ndarray) -> Element:
        if v.shape != (self.dim,):
            raise StructuralError(f"coordinate vector has shape {v.shape}")
        blocks = []
        pos = 0
        for d, w in self.algebra.blocks:
            blk = np.zeros((d, d), dtype=complex)
            sw = np.sqrt(w)
            blk[np.arange(d), np.arange(d)] = v[pos:pos + d] / sw
            pos += d
            if d > 1:
                iu, ju = np.triu_indices(d, k=1)
                s2w = np.sqrt(2.0 * w)
                n_off = len(iu)
                re = v[pos:pos + n_off] / s2w
                im = v[pos + n_off:pos + 2 * n_off] / s2w
                blk[iu, ju] = re + 1j * im
                blk[ju, iu] = re - 1j * im
                pos += 2 * n_off
            blocks.append(blk)
        return Element(self.algebra, tuple(blocks))

    def antiherm_coords(self, xi_blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Coordinates of an anti-hermitian block tuple xi via xi = i * h."""
        h = Element(self.algebra, tuple(-1j * np.asarray(b, dtype=complex)
                                        for b in xi_blocks))
        return self.coords(h)

    def antiherm_blocks(self, v: np.ndarray) -> tuple[np.ndarray, ...]:
        h = self.element(v)
        return tuple(1j * b for b in h.blocks)
