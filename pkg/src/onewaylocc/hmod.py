"""Diagonal-algebra valued inner products ``<X, Y>_W = Delta(W* Y* X W)`` and the
orthogonality bounds they imply."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    ShapeError,
    Tolerance,
    as_matrix,
    as_square,
    gen_pauli_z,
    is_unitary,
    numerical_rank,
    scale_of,
)

EXHAUSTIVE_MAX_COLUMNS = 12
SAMPLED_SUBSETS = 200


@dataclass(frozen=True)
class ModuleInnerProductContext:
    W: np.ndarray | None = None  # d x r, identity when None
    tol: Tolerance = DEFAULT_TOL

    def weight(self, d: int) -> np.ndarray:
        if self.W is None:
            return np.eye(d, dtype=np.complex128)
        w = as_matrix(self.W, "W")
        if w.shape[0] != d:
            raise ShapeError(f"W must have {d} rows, got {w.shape}")
        if w.shape[1] < d:
            raise ShapeError("W must have at least d columns")
        return w


DEFAULT_CTX = ModuleInnerProductContext()


def module_inner_diag(x, y, ctx: ModuleInnerProductContext = DEFAULT_CTX) -> np.ndarray:
    """Diagonal of ``<X, Y>_W`` as a length-r vector."""
    x = as_square(x, "X")
    y = as_square(y, "Y")
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {y.shape}")
    w = ctx.weight(x.shape[0])
    return np.einsum("ak,ak->k", (y @ w).conj(), x @ w)


def module_inner(x, y, ctx: ModuleInnerProductContext = DEFAULT_CTX) -> np.ndarray:
    return np.diag(module_inner_diag(x, y, ctx))


def _is_zero(diag: np.ndarray, scale: float, tol: Tolerance) -> bool:
    return bool(np.max(np.abs(diag), initial=0.0) <= tol.zero_abs * scale)


def equivalence_check(u, v, tol: Tolerance = DEFAULT_TOL) -> np.ndarray | None:
    """Invertible diagonal D with ``U = V D``, or None."""
    u = as_square(u, "U")
    v = as_square(v, "V")
    if u.shape != v.shape:
        raise ShapeError(f"shape mismatch {u.shape} vs {v.shape}")
    scale = scale_of(u, v)
    vn = np.sum(np.abs(v) ** 2, axis=0)
    un = np.sum(np.abs(u) ** 2, axis=0)
    dvals = np.ones(u.shape[1], dtype=np.complex128)
    for k in range(u.shape[1]):
        if vn[k] > 0:
            dvals[k] = np.vdot(v[:, k], u[:, k]) / vn[k]
        elif un[k] > 0:
            return None
    if np.max(np.abs(u - v * dvals)) > tol.zero_abs * scale:
        return None
    if np.min(np.abs(dvals)) <= tol.zero_abs:
        return None
    return np.diag(dvals)


def z_diagonals(d: int) -> np.ndarray:
    """Powers of the clock matrix: d diagonal unitaries with ``Tr(D_j* D_i) = d delta_ij``."""
    z = np.diag(gen_pauli_z(d))
    return np.stack([np.diag(z**i) for i in range(d)])


@dataclass
class OrthogonalFamilyReport:
    orthogonal: bool
    n: int
    d: int
    failing_pair: tuple[int, int] | None = None
    bound_holds: bool | None = None
    expansion_size: int | None = None
    expansion_max_overlap: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def check_orthogonal_family(us, ctx: ModuleInnerProductContext = DEFAULT_CTX) -> OrthogonalFamilyReport:
    """Pairwise module-orthogonality of unitaries, the ``n <= d`` bound, and the
    expansion ``{U_k W D_i}`` (square W) whose nd members are HS-orthogonal."""
    us = [as_square(u, "U") for u in us]
    d = us[0].shape[0]
    tol = ctx.tol
    for u in us:
        if u.shape != (d, d) or not is_unitary(u, Tolerance(zero_abs=max(tol.zero_abs, 1e-9))):
            raise ValueError("family members must be d x d unitaries")
    n = len(us)
    w = ctx.weight(d)
    for i, j in combinations(range(n), 2):
        if not _is_zero(module_inner_diag(us[i], us[j], ctx), 1.0, tol):
            return OrthogonalFamilyReport(False, n, d, failing_pair=(i, j))
    report = OrthogonalFamilyReport(True, n, d, bound_holds=n <= d)
    if w.shape[1] == d:
        stack = np.stack([u @ w @ dm for u in us for dm in z_diagonals(d)]).reshape(n * d, -1)
        gram = stack.conj() @ stack.T / d
        report.expansion_size = n * d
        report.expansion_max_overlap = float(np.max(np.abs(gram - np.eye(n * d))))
    if not report.bound_holds:
        raise RuntimeError(f"{n} > {d} module-orthogonal unitaries: numerical inconsistency")
    return report


def genericity_check(w, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> bool:
    """Every d columns of the d x r matrix W are linearly independent.

    Exhaustive up to 12 columns; beyond that 200 random d-subsets are tested.
    """
    w = as_matrix(w, "W")
    d, r = w.shape
    if r < d:
        raise ShapeError("W needs at least d columns")
    if r <= EXHAUSTIVE_MAX_COLUMNS or comb(r, d) <= SAMPLED_SUBSETS:
        subsets = combinations(range(r), d)
    else:
        rng = np.random.default_rng(seed)
        subsets = (rng.choice(r, size=d, replace=False) for _ in range(SAMPLED_SUBSETS))
    for cols in subsets:
        if numerical_rank(w[:, list(cols)], tol) < d:
            return False
    return True


@dataclass
class RankBoundReport:
    orthogonal: bool
    n: int
    d: int
    generic: bool
    ranks: list[int] = field(default_factory=list)
    sum_ranks: int | None = None
    bound: int = 0
    slack: int | None = None
    bound_holds: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def pairwise_module_orthogonal(ms, ctx: ModuleInnerProductContext = DEFAULT_CTX) -> bool:
    ms = [as_square(m) for m in ms]
    w = ctx.weight(ms[0].shape[0])
    y = np.stack([m @ w for m in ms])
    g = np.einsum("jak,iak->ijk", y.conj(), y)
    n = len(ms)
    g[np.arange(n), np.arange(n)] = 0
    scale = scale_of(np.einsum("iak,iak->ik", y.conj(), y))
    return _is_zero(g, scale, ctx.tol)


def rank_bound_check(ms, ctx: ModuleInnerProductContext = DEFAULT_CTX, seed: int = 0) -> RankBoundReport:
    """Check ``sum_k rank(M_k) <= d**2`` for a module-orthogonal family with generic W.

    When a precondition fails the report says so and makes no claim.
    """
    ms = [as_square(m) for m in ms]
    d = ms[0].shape[0]
    w = ctx.weight(d)
    orth = pairwise_module_orthogonal(ms, ctx)
    generic = genericity_check(w, ctx.tol, seed)
    report = RankBoundReport(orth, len(ms), d, generic, bound=d * d)
    if not (orth and generic):
        return report
    report.ranks = [numerical_rank(m, ctx.tol) for m in ms]
    report.sum_ranks = sum(report.ranks)
    report.slack = report.bound - report.sum_ranks
    report.bound_holds = report.sum_ranks <= report.bound
    return report


def hs_orthogonal_after_weight(ms, ctx: ModuleInnerProductContext = DEFAULT_CTX) -> bool:
    """Module orthogonality forces ``{M_k W}`` to be HS-orthogonal; check the latter."""
    ms = [as_square(m) for m in ms]
    w = ctx.weight(ms[0].shape[0])
    flat = np.stack([(m @ w).reshape(-1) for m in ms])
    g = flat.conj() @ flat.T
    off = g - np.diag(np.diag(g))
    return bool(np.max(np.abs(off), initial=0.0) <= ctx.tol.zero_abs * scale_of(np.diag(g)))

