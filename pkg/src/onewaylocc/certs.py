"""One-way LOCC certificates: verification and structured constructions.

A state set is a family of d x d matrices ``M_i`` standing for the bipartite
states ``(I (x) M_i)|Phi>``.  A certificate is a d x r co-isometry ``W``
(``W W* = I_d``) such that every diagonal entry of ``W* M_j* M_i W`` vanishes
for ``i != j``.  Its columns, rescaled, are the vectors of a rank-one
measurement for Alice after which Bob faces orthogonal states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jsonio
from .matcore import (
    DEFAULT_TOL,
    ShapeError,
    Tolerance,
    as_matrix,
    as_square,
    coisometry_defect,
    dagger,
    fourier_matrix,
    is_permutation_matrix,
    is_unitary,
    random_complex,
    scale_of,
)


class NotOrthogonalError(ValueError):
    """The input states are not pairwise orthogonal, so no certificate exists."""


@dataclass(frozen=True)
class StateSet:
    d: int
    matrices: np.ndarray  # shape (n, d, d)
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=np.complex128)
        if mats.ndim != 3 or mats.shape[0] == 0:
            raise ShapeError("a state set needs at least one d x d matrix")
        if mats.shape[1:] != (self.d, self.d):
            raise ShapeError(f"all members must be {self.d}x{self.d}, got {mats.shape[1:]}")
        if not np.all(np.isfinite(mats)):
            raise ValueError("state matrices have non-finite entries")
        if self.labels and len(self.labels) != mats.shape[0]:
            raise ValueError("labels must match the number of matrices")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_matrices(cls, mats, labels=None) -> StateSet:
        mats = [as_matrix(m) for m in mats]
        if not mats:
            raise ShapeError("a state set needs at least one matrix")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ShapeError(f"dimension mismatch within set: {m.shape} vs {(d, d)}")
        return cls(d, np.stack(mats), tuple(labels or ()))

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.matrices)

    def products(self) -> np.ndarray:
        """``P[i, j] = M_j* M_i`` with shape (n, n, d, d)."""
        return np.einsum("jba,ibc->ijac", self.matrices.conj(), self.matrices)

    def to_json(self) -> dict:
        out = {"d": self.d, "matrices": [jsonio.matrix_to_json(m) for m in self.matrices]}
        out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, obj) -> StateSet:
        if not isinstance(obj, dict) or "d" not in obj or "matrices" not in obj:
            raise jsonio.FormatError("state set must have 'd' and 'matrices'")
        d = obj["d"]
        if not isinstance(d, int) or d < 1:
            raise jsonio.FormatError("'d' must be a positive integer")
        if not isinstance(obj["matrices"], list) or not obj["matrices"]:
            raise jsonio.FormatError("'matrices' must be a non-empty list")
        mats = [jsonio.matrix_from_json(m) for m in obj["matrices"]]
        for m in mats:
            if m.shape != (d, d):
                raise jsonio.FormatError(f"matrix of shape {m.shape} in a d={d} state set")
        labels = obj.get("labels") or ()
        if not isinstance(labels, list | tuple) or not all(isinstance(s, str) for s in labels):
            raise jsonio.FormatError("'labels' must be a list of strings")
        return cls(d, np.stack(mats), tuple(labels))


@dataclass(frozen=True)
class Certificate:
    W: np.ndarray  # d x r, W W* = I_d
    residual: float | None = None

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def r(self) -> int:
        return self.W.shape[1]

    def to_json(self, states: StateSet | None = None) -> dict:
        out = states.to_json() if states is not None else {}
        out["W"] = jsonio.matrix_to_json(self.W)
        out["residual"] = self.residual
        return out

    @classmethod
    def from_json(cls, obj) -> Certificate:
        if not isinstance(obj, dict) or "W" not in obj:
            raise jsonio.FormatError("certificate must have a 'W' matrix")
        res = obj.get("residual")
        if res is not None and not isinstance(res, (int, float)):
            raise jsonio.FormatError("'residual' must be a number or null")
        return cls(jsonio.matrix_from_json(obj["W"]), None if res is None else float(res))


@dataclass(frozen=True)
class CertificateCheck:
    accepted: bool
    residual: float
    coisometry_defect: float
    worst_pair: tuple[int, int] | None = None

    def __bool__(self):
        return self.accepted


@dataclass(frozen=True)
class AliceMeasurement:
    """Rank-one POVM ``sum_k m_k |phi_k><phi_k| = I`` (vectors are rows)."""

    weights: np.ndarray  # shape (r,)
    vectors: np.ndarray  # shape (r, d), unit rows

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def r(self) -> int:
        return self.vectors.shape[0]

    def effects(self) -> np.ndarray:
        v = self.vectors
        return self.weights[:, None, None] * np.einsum("ka,kb->kab", v, v.conj())

    def completeness_defect(self) -> float:
        return float(np.max(np.abs(self.effects().sum(axis=0) - np.eye(self.d))))


@dataclass(frozen=True)
class LatinSquare:
    cells: np.ndarray  # d x d integers in 1..d

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if not is_latin(cells):
            raise ValueError("not a Latin square")
        object.__setattr__(self, "cells", cells.astype(int))

    @property
    def d(self) -> int:
        return self.cells.shape[0]


def is_latin(cells) -> bool:
    cells = np.asarray(cells)
    if cells.ndim != 2 or cells.shape[0] != cells.shape[1]:
        return False
    full = np.arange(1, cells.shape[0] + 1)
    rows_ok = all(np.array_equal(np.sort(row), full) for row in cells)
    cols_ok = all(np.array_equal(np.sort(col), full) for col in cells.T)
    return rows_ok and cols_ok


def _pairwise_traces(states: StateSet) -> np.ndarray:
    m = states.matrices.reshape(states.n, -1)
    # G[i, j] = Tr(M_j* M_i)
    return m @ m.conj().T


def verify_arbitrary(states: StateSet, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Pairwise Hilbert-Schmidt orthogonality, i.e. distinguishability by any measurement."""
    g = _pairwise_traces(states)
    off = g - np.diag(np.diag(g))
    norms = np.sqrt(np.real(np.diag(g)))
    return bool(np.max(np.abs(off), initial=0.0) <= tol.zero_abs * max(1.0, float(norms.max()) ** 2))


def diagonal_overlaps(states: StateSet, w: np.ndarray) -> np.ndarray:
    """``g[i, j, k] = (W* M_j* M_i W)[k, k]`` with shape (n, n, r)."""
    y = states.matrices @ w
    return np.einsum("jak,iak->ijk", y.conj(), y)


def _residual_scale(states: StateSet) -> float:
    grams = np.einsum("iba,ibc->iac", states.matrices.conj(), states.matrices)
    return scale_of(grams)


def verify_oneway_certificate(states: StateSet, w, tol: Tolerance = DEFAULT_TOL) -> CertificateCheck:
    w = as_matrix(w, "W")
    d, r = w.shape
    if d != states.d:
        raise ShapeError(f"W has {d} rows but the states live in dimension {states.d}")
    if r < d:
        raise ShapeError(f"W must be d x r with r >= d, got {d}x{r}")
    g = diagonal_overlaps(states, w)
    n = states.n
    g[np.arange(n), np.arange(n), :] = 0
    absg = np.abs(g)
    residual = float(absg.max(initial=0.0))
    worst = None
    if n > 1:
        i, j, _ = np.unravel_index(int(np.argmax(absg)), absg.shape)
        worst = (int(i), int(j))
    defect = coisometry_defect(w)
    accepted = residual <= tol.zero_abs * _residual_scale(states) and defect <= tol.zero_abs
    return CertificateCheck(bool(accepted), residual, defect, worst)


def certify(states: StateSet, w, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Attach the computed residual to ``W``; raises if the verifier rejects it."""
    check = verify_oneway_certificate(states, w, tol)
    if not check.accepted:
        raise ValueError(
            f"certificate rejected: residual {check.residual:.3e}, "
            f"co-isometry defect {check.coisometry_defect:.3e}"
        )
    return Certificate(np.asarray(w, dtype=np.complex128), check.residual)


def alice_to_w(meas: AliceMeasurement, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """``W = sum_k sqrt(m_k) |phi_k><k|``: column k is ``sqrt(m_k) phi_k``."""
    defect = meas.completeness_defect()
    if defect > tol.zero_abs:
        raise ValueError(f"measurement is not complete (defect {defect:.3e})")
    w = (np.sqrt(meas.weights)[:, None] * meas.vectors).T
    return Certificate(np.ascontiguousarray(w))


def w_to_alice(cert: Certificate, tol: Tolerance = DEFAULT_TOL) -> AliceMeasurement:
    w = as_matrix(cert.W, "W")
    if w.shape[1] < w.shape[0] or coisometry_defect(w) > tol.zero_abs:
        raise ValueError("W is not a co-isometry")
    norms = np.linalg.norm(w, axis=0)
    keep = norms > tol.zero_abs
    vectors = (w[:, keep] / norms[keep]).T
    return AliceMeasurement(norms[keep] ** 2, np.ascontiguousarray(vectors))


# -- permutation families ----------------------------------------------------


@dataclass(frozen=True)
class PermutationAnalysis:
    distinguishable: bool
    W: np.ndarray | None
    latin: LatinSquare | None


def permutation_analysis(perms) -> PermutationAnalysis:
    """Decide a family of permutation matrices: distinguishable iff no two share a 1.

    For ``n == d`` distinguishable permutations the cell ``(i, j)`` of the
    Latin square holds the (1-based) index of the unique ``P_k`` with a one there.
    """
    ps = [np.asarray(p) for p in perms]
    if not ps:
        raise ValueError("empty permutation family")
    d = ps[0].shape[0]
    for p in ps:
        if p.shape != (d, d) or not is_permutation_matrix(np.real_if_close(p)):
            raise ValueError("input contains a non-permutation matrix")
    stack = np.real(np.stack(ps)).astype(int)
    n = len(ps)
    # Delta(P_j^T P_i) = 0 for all i != j  <=>  no position is covered twice.
    distinguishable = bool(np.all(stack.sum(axis=0) <= 1))
    if not distinguishable:
        return PermutationAnalysis(False, None, None)
    latin = None
    if n == d:
        latin = LatinSquare(np.einsum("k,kab->ab", np.arange(1, n + 1), stack))
    return PermutationAnalysis(True, np.eye(d, dtype=np.complex128), latin)


# -- simultaneous Schmidt decomposition --------------------------------------


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``M_k = U @ diag(diagonals[k]) @ V`` for every member."""

    U: np.ndarray
    diagonals: np.ndarray  # shape (n, d)
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return np.einsum("ab,kb,bc->kac", self.U, self.diagonals, self.V)


def simultaneous_schmidt(
    states: StateSet, tol: Tolerance = DEFAULT_TOL, seed: int = 0, attempts: int = 8
) -> SchmidtDecomposition | None:
    """Randomized search for a simultaneous (weak) Schmidt decomposition.

    The SVD of a random combination of the members fixes U and V whenever a
    decomposition exists (almost surely).  ``None`` only means that none of
    the ``attempts`` combinations produced one.
    """
    rng = np.random.default_rng(seed)
    mats = states.matrices
    bound = tol.zero_abs * scale_of(mats)
    for _ in range(attempts):
        coeffs = np.ones(states.n, dtype=np.complex128)
        coeffs[1:] = random_complex(states.n - 1, rng)
        t = np.einsum("k,kab->ab", coeffs, mats)
        u, _, vh = np.linalg.svd(t)
        core = dagger(u)[None] @ mats @ dagger(vh)[None]
        diags = np.diagonal(core, axis1=1, axis2=2).copy()
        off = core - np.einsum("ka,ab->kab", diags, np.eye(states.d))
        if np.max(np.abs(off)) > bound:
            continue
        dec = SchmidtDecomposition(u, diags, vh)
        if np.max(np.abs(dec.reconstruct() - mats)) <= bound:
            return dec
    return None


def schmidt_to_certificate(v, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """``W = V* F``: conjugating the common diagonal frame into circulants."""
    v = as_square(v, "V")
    if not is_unitary(v, tol):
        raise ValueError("V must be unitary")
    return Certificate(dagger(v) @ fourier_matrix(v.shape[0]))


# -- zero-diagonal unitary similarity ----------------------------------------


def _hit_on_pair(m: np.ndarray, x: np.ndarray, y: np.ndarray, target: complex) -> np.ndarray:
    """Unit v in span{x, y} with ``v* m v == target``.

    x and y are orthonormal and ``target`` lies on the segment between
    ``x* m x`` and ``y* m y``.
    """
    basis = np.column_stack([x, y])
    a = dagger(basis) @ m @ basis - target * np.eye(2)
    p, q = a[0, 0], a[1, 1]
    if p == 0 or q == p:
        return x
    if q == 0:
        return y
    # rotate so that p sits on the negative and q on the positive real axis
    b = a * np.exp(-1j * np.angle(q - p))
    h = (b + dagger(b)) / 2
    k = (b - dagger(b)) / 2j
    # phase on y that kills the cross term of the anti-Hermitian part
    phase = np.exp(1j * (np.pi / 2 - np.angle(k[0, 1])))
    beta = float(np.real(phase * h[0, 1]))
    p_re, q_re = min(float(np.real(h[0, 0])), 0.0), max(float(np.real(h[1, 1])), 0.0)
    if p_re == 0.0:
        return x
    if q_re == 0.0:
        return y
    disc = np.sqrt(max(beta * beta - p_re * q_re, 0.0))
    tan = -p_re / (beta + disc) if beta >= 0 else (disc - beta) / q_re
    v = x + tan * phase * y
    return v / np.sqrt(1.0 + tan * tan)


def _isotropic_vector(m: np.ndarray) -> np.ndarray:
    """Unit v with ``v* m v = 0`` for a trace-zero square m.

    The diagonal entries average to zero, so zero lies in the convex hull of
    at most three of them.  Start from the largest-magnitude entry and pair
    it with the one or two entries that bracket the opposite direction.
    """
    n = m.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    z = np.diag(m)
    a = int(np.argmax(np.abs(z)))
    if abs(z[a]) == 0.0:
        return eye[:, 0]
    w = -z * np.conj(z[a]) / abs(z[a])  # w[a] on the negative real axis
    others = [k for k in range(n) if k != a]
    ang = np.angle(w[others])
    upper = [(t, k) for t, k in zip(ang, others) if t >= 0]
    lower = [(t, k) for t, k in zip(ang, others) if t < 0]
    b = min(upper)[1] if upper else None
    c = max(lower)[1] if lower else None
    if b is not None and c is not None:
        wb, wc = w[b], w[c]
        s = wb.imag / (wb.imag - wc.imag)
        cross = float(np.real(wb + s * (wc - wb)))
        if cross >= 0:
            target = cross * (-z[a] / abs(z[a]))  # back to the original frame
            y = _hit_on_pair(m, eye[:, b], eye[:, c], target)
            return _hit_on_pair(m, eye[:, a], y, 0.0)
    # one entry already points (nearly) opposite to z[a]
    candidates = [k for k in (b, c) if k is not None]
    best = min(candidates, key=lambda k: abs(np.angle(w[k])))
    return _hit_on_pair(m, eye[:, a], eye[:, best], 0.0)


def _householder_completion(v: np.ndarray) -> np.ndarray:
    """Unitary whose first column is a unit multiple of v."""
    n = v.size
    ph = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    u = v.astype(np.complex128).copy()
    u[0] += ph
    return np.eye(n, dtype=np.complex128) - 2.0 * np.outer(u, u.conj()) / np.vdot(u, u).real


def fillmore_zero_diagonal(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Unitary V with ``Delta(V* M V) = 0`` for a trace-zero M.

    Repeatedly finds an isotropic vector of the current trailing block,
    completes it to a unitary and deflates.
    """
    m = as_square(m, "M")
    d = m.shape[0]
    scale = scale_of(m)
    tr = np.trace(m)
    if abs(tr) > tol.zero_abs * scale * d:
        raise ValueError(f"matrix has non-zero trace {tr:.3e}")
    v_total = np.eye(d, dtype=np.complex128)
    for lvl in range(d - 1):
        sub = (dagger(v_total[:, lvl:]) @ m @ v_total[:, lvl:])
        sub = sub - np.trace(sub) / sub.shape[0] * np.eye(sub.shape[0])
        q = _householder_completion(_isotropic_vector(sub))
        v_total[:, lvl:] = v_total[:, lvl:] @ q
    resid = np.max(np.abs(np.diag(dagger(v_total) @ m @ v_total)))
    if resid > 1e-8 * scale or coisometry_defect(v_total) > 1e-10:
        raise RuntimeError(f"zero-diagonal construction lost accuracy ({resid:.3e})")
    return v_total


def two_state_certificate(m1, m2, tol: Tolerance = DEFAULT_TOL) -> Certificate:
    """Certificate for any two orthogonal states via a zero-diagonal frame of ``M2* M1``."""
    m1 = as_square(m1, "M1")
    m2 = as_square(m2, "M2")
    if m1.shape != m2.shape:
        raise ShapeError("M1 and M2 must have the same shape")
    prod = dagger(m2) @ m1
    d = m1.shape[0]
    if abs(np.trace(prod)) > tol.zero_abs * scale_of(prod) * d:
        raise NotOrthogonalError("the two states are not orthogonal")
    v = fillmore_zero_diagonal(prod, Tolerance(zero_abs=tol.zero_abs * 10, rank_rel=tol.rank_rel))
    return certify(StateSet.from_matrices([m1, m2]), v, tol)
