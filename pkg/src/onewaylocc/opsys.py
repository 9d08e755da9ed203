"""Operator systems spanned by the products ``M_j* M_i`` and separating vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certs import StateSet
from .matcore import (
    DEFAULT_TOL,
    ShapeError,
    Tolerance,
    as_matrix,
    as_square,
    dagger,
    numerical_rank,
    random_complex,
    scale_of,
)


@dataclass(frozen=True)
class OperatorSystem:
    """Span with a Hilbert-Schmidt orthonormal basis, shape (s, d, d)."""

    d: int
    basis: np.ndarray
    generators: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def _flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def coefficients(self, x) -> np.ndarray:
        """HS coordinates of x (or of a stack of matrices) in the basis."""
        x = np.asarray(x, dtype=np.complex128)
        flat = x.reshape(-1, self.d * self.d)
        c = flat @ self._flat().conj().T
        return c.reshape(x.shape[:-2] + (self.dim,))

    def projection_residual(self, x) -> np.ndarray:
        """HS norm of the component of x orthogonal to the span."""
        x = np.asarray(x, dtype=np.complex128)
        flat = x.reshape(-1, self.d * self.d)
        rest = flat - (flat @ self._flat().conj().T) @ self._flat()
        return np.linalg.norm(rest, axis=1).reshape(x.shape[:-2])

    def contains(self, x, tol: Tolerance = DEFAULT_TOL) -> bool:
        x = np.asarray(x, dtype=np.complex128)
        return bool(self.projection_residual(x) <= 10 * tol.zero_abs * max(1.0, np.linalg.norm(x)))

    def element(self, coeffs) -> np.ndarray:
        return np.einsum("s,sab->ab", np.asarray(coeffs), self.basis)

    def gram_defect(self) -> float:
        f = self._flat()
        return float(np.max(np.abs(f @ f.conj().T - np.eye(self.dim))))

    def adjoint_defect(self) -> float:
        return float(np.max(self.projection_residual(dagger(self.basis))))


def orthonormal_span(mats, tol: Tolerance = DEFAULT_TOL, labels=None):
    """Modified Gram-Schmidt (two passes) in the HS inner product.

    Returns the orthonormal basis and the labels of the matrices that
    contributed a new direction.
    """
    mats = [np.asarray(m, dtype=np.complex128) for m in mats]
    labels = list(labels) if labels is not None else list(range(len(mats)))
    basis, kept = [], []
    for m, lab in zip(mats, labels):
        norm0 = np.linalg.norm(m)
        if norm0 == 0.0:
            continue
        v = m.copy()
        for _ in range(2):
            for b in basis:
                v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > tol.rank_rel * norm0:
            basis.append(v / nv)
            kept.append(lab)
    return basis, kept


def operator_system(mats, tol: Tolerance = DEFAULT_TOL, include_adjoints: bool = True) -> OperatorSystem:
    """Smallest operator system holding the given matrices (identity and adjoints added)."""
    mats = [as_square(m) for m in mats]
    d = mats[0].shape[0]
    gens = [np.eye(d, dtype=np.complex128)] + mats
    labels = ["I"] + [f"A{k}" for k in range(len(mats))]
    if include_adjoints:
        gens += [dagger(m) for m in mats]
        labels += [f"A{k}*" for k in range(len(mats))]
    basis, kept = orthonormal_span(gens, tol, labels)
    return OperatorSystem(d, np.stack(basis), tuple(kept))


def span_products(states: StateSet, tol: Tolerance = DEFAULT_TOL) -> OperatorSystem:
    """Operator system spanned by the identity and every ``M_j* M_i``."""
    d = states.d
    prods = states.products()
    gens = [np.eye(d, dtype=np.complex128)]
    labels = ["I"]
    for i in range(states.n):
        for j in range(states.n):
            gens.append(prods[i, j])
            labels.append((j, i))  # M_j* M_i
    basis, kept = orthonormal_span(gens, tol, labels)
    return OperatorSystem(d, np.stack(basis), tuple(kept))


def is_multiplicatively_closed(osys: OperatorSystem, tol: Tolerance = DEFAULT_TOL) -> bool:
    b = osys.basis
    prods = np.einsum("xab,ybc->xyac", b, b)
    resid = osys.projection_residual(prods)
    norms = np.linalg.norm(prods.reshape(osys.dim, osys.dim, -1), axis=2)
    return bool(np.all(resid <= 10 * tol.zero_abs * np.maximum(1.0, norms)))


@dataclass(frozen=True)
class ProbablyNone:
    """No separating vector was found.

    With ``reason == "dimension bound"`` this is a proof (dim > d); otherwise
    it is the outcome of a randomized search and ``max_rank`` is the best
    rank observed.
    """

    max_rank: int | None
    reason: str

    def __bool__(self):
        return False

    @property
    def proven(self) -> bool:
        return self.reason == "dimension bound"


def _orbit_rank(osys: OperatorSystem, v: np.ndarray, tol: Tolerance) -> int:
    cols = osys.basis @ v  # (s, d)
    return numerical_rank(cols.T, tol)


def separating_vector_search(
    osys: OperatorSystem, trials: int = 16, seed: int = 0, tol: Tolerance = DEFAULT_TOL
) -> np.ndarray | ProbablyNone:
    """Random search for v with ``A v != 0`` for every nonzero A in the span.

    v separates iff ``[B_1 v | ... | B_s v]`` has rank s; the set of such v is
    Zariski-open, so a handful of Gaussian draws decides almost surely.
    """
    if osys.dim > osys.d:
        return ProbablyNone(None, "dimension bound")
    rng = np.random.default_rng(seed)
    best = 0
    for _ in range(trials):
        v = random_complex(osys.d, rng)
        v /= np.linalg.norm(v)
        rank = _orbit_rank(osys, v, tol)
        if rank == osys.dim:
            return v
        best = max(best, rank)
    return ProbablyNone(best, "randomized search")


def is_separating(osys: OperatorSystem, v, tol: Tolerance = DEFAULT_TOL) -> bool:
    return _orbit_rank(osys, np.asarray(v, dtype=np.complex128), tol) == osys.dim


@dataclass(frozen=True)
class BlockStructure:
    """Pairs ``(k_i, n_i)`` for the algebra ``sum_i I_{k_i} (x) M_{n_i}``."""

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blocks = tuple((int(k), int(n)) for k, n in self.blocks)
        if not blocks or any(k < 1 or n < 1 for k, n in blocks):
            raise ValueError("multiplicities and block sizes must be positive integers")
        object.__setattr__(self, "blocks", blocks)

    @property
    def ambient_dim(self) -> int:
        return sum(k * n for k, n in self.blocks)


def block_structure_has_separating_vector(structure: BlockStructure) -> bool:
    return all(k >= n for k, n in structure.blocks)


def block_algebra(structure: BlockStructure, d: int | None = None) -> OperatorSystem:
    """Explicit basis of ``sum_i I_{k_i} (x) M_{n_i}`` embedded in C^d (zero padding)."""
    total = structure.ambient_dim
    d = total if d is None else d
    if total > d:
        raise ShapeError(f"blocks need dimension {total} > {d}")
    mats = []
    offset = 0
    for k, n in structure.blocks:
        for a in range(n):
            for b in range(n):
                unit = np.zeros((n, n), dtype=np.complex128)
                unit[a, b] = 1.0
                m = np.zeros((d, d), dtype=np.complex128)
                m[offset : offset + k * n, offset : offset + k * n] = np.kron(np.eye(k), unit) / np.sqrt(k)
                mats.append(m)
        offset += k * n
    return OperatorSystem(d, np.stack(mats), tuple(structure.blocks))


def theorem_delta_membership(x, w, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Does X satisfy ``Delta(W* X W) = Tr(X)/d * Delta(W* W)``?"""
    x = as_square(x, "X")
    w = as_matrix(w, "W")
    d = x.shape[0]
    if w.shape[0] != d:
        raise ShapeError(f"W must have {d} rows, got {w.shape}")
    lhs = np.einsum("ak,ab,bk->k", w.conj(), x, w)
    rhs = np.trace(x) / d * np.sum(np.abs(w) ** 2, axis=0)
    return bool(np.max(np.abs(lhs - rhs)) <= tol.zero_abs * scale_of(x) * scale_of(w) ** 2)


def delta_separating_vector(w) -> np.ndarray:
    """First column of W with positive norm (not normalized)."""
    w = as_matrix(w, "W")
    norms = np.sum(np.abs(w) ** 2, axis=0)
    nz = np.flatnonzero(norms > 0)
    if nz.size == 0:
        raise ValueError("W is zero")
    return w[:, nz[0]].copy()


def is_unambiguous_vector(states: StateSet, phi, tol: Tolerance = DEFAULT_TOL) -> bool:
    phi = np.asarray(phi, dtype=np.complex128)
    cols = states.matrices @ phi  # (n, d)
    return numerical_rank(cols.T, tol) == states.n


def unambiguous_check(
    states: StateSet,
    trials: int = 16,
    seed: int = 0,
    w=None,
    tol: Tolerance = DEFAULT_TOL,
) -> np.ndarray | ProbablyNone:
    """Vector phi making ``{M_i phi}`` linearly independent, if one is found.

    Columns of a known certificate ``w`` are tried first, then Gaussian draws.
    """
    if states.n > states.d:
        return ProbablyNone(None, "dimension bound")
    candidates = []
    if w is not None:
        w = as_matrix(w, "W")
        candidates += [w[:, k] for k in range(w.shape[1]) if np.linalg.norm(w[:, k]) > 0]
    rng = np.random.default_rng(seed)
    candidates += [random_complex(states.d, rng) for _ in range(trials)]
    best = 0
    for phi in candidates:
        phi = phi / np.linalg.norm(phi)
        rank = numerical_rank((states.matrices @ phi).T, tol)
        if rank == states.n:
            return phi
        best = max(best, rank)
    return ProbablyNone(best, "randomized search")
