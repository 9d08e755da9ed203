"""Dense complex matrix primitives and the fixed special matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Vectors are
1-D arrays.  Everything here is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when an operand has a structurally invalid shape."""


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared across the package.

    ``zero_abs`` is an absolute max-entry threshold (scaled by the size of the
    inputs where noted); ``rank_rel`` is relative to the largest singular value.
    """

    zero_abs: float = 1e-9
    rank_rel: float = 1e-12

    def __post_init__(self):
        if self.zero_abs < 0 or self.rank_rel < 0:
            raise ValueError("tolerances must be non-negative")


DEFAULT_TOL = Tolerance()


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    return m


def max_abs(*arrays) -> float:
    """Largest entry modulus over all arguments (0.0 for no arguments)."""
    return max((float(np.max(np.abs(a))) for a in arrays if np.size(a)), default=0.0)


def scale_of(*arrays) -> float:
    return max(1.0, max_abs(*arrays))


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def delta_map(m) -> np.ndarray:
    """Keep the diagonal of a square matrix and zero everything else."""
    m = as_square(m)
    return np.diag(np.diag(m))


def vec_op(a) -> np.ndarray:
    """Stack the columns of ``a`` into one vector.

    With this convention ``kron(C, A) @ vec(B) == vec(A @ B @ C.T)``.
    """
    return np.asarray(a, dtype=np.complex128).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=np.complex128).reshape((rows, cols), order="F")


def maximally_entangled_state(d: int) -> np.ndarray:
    return vec_op(np.eye(d)) / np.sqrt(d)


def _check_dim(d) -> int:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def fourier_matrix(d: int) -> np.ndarray:
    """Unitary DFT matrix with ``F[j, k] = omega**(j*k) / sqrt(d)``."""
    d = _check_dim(d)
    jk = np.outer(np.arange(d), np.arange(d)) % d
    return np.exp(2j * np.pi * jk / d) / np.sqrt(d)


def gen_pauli_x(d: int) -> np.ndarray:
    """Cyclic shift ``X|k> = |k+1 mod d>``."""
    d = _check_dim(d)
    return np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)


def gen_pauli_z(d: int) -> np.ndarray:
    """Clock ``Z|k> = omega**k |k>``."""
    d = _check_dim(d)
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def weyl(d: int, a: int, b: int) -> np.ndarray:
    """The generalized Pauli ``X**a @ Z**b``."""
    x = np.linalg.matrix_power(gen_pauli_x(d), a % d)
    z = np.diag(np.exp(2j * np.pi * b * np.arange(d) / d))
    return x @ z


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr(B* A)``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(b, a))


def coisometry_defect(w) -> float:
    w = as_matrix(w)
    return float(np.max(np.abs(w @ dagger(w) - np.eye(w.shape[0]))))


def is_coisometry(w, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``W W* = I_d`` entrywise to ``tol.zero_abs``.

    A d x r matrix with r < d cannot be a co-isometry and raises ShapeError.
    """
    w = as_matrix(w)
    d, r = w.shape
    if r < d:
        raise ShapeError(f"a co-isometry needs at least as many columns as rows, got {d}x{r}")
    return coisometry_defect(w) <= tol.zero_abs


def is_unitary(u, tol: Tolerance = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return coisometry_defect(u) <= tol.zero_abs * scale_of(u)


def numerical_rank(m, tol: Tolerance = DEFAULT_TOL) -> int:
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_rel * s[0]))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_coisometry(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Top d rows of a Haar-random r x r unitary."""
    return haar_unitary(r, rng)[:d, :]


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def polar_factor(a: np.ndarray) -> np.ndarray:
    """Nearest co-isometry ``(A A*)^(-1/2) A`` for a full-row-rank A."""
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    return u @ vh


def is_permutation_matrix(p) -> bool:
    p = np.asarray(p)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    if not np.all((p == 0) | (p == 1)):
        return False
    return bool(np.all(p.sum(axis=0) == 1) and np.all(p.sum(axis=1) == 1))


def permutation_matrix(perm) -> np.ndarray:
    """Matrix sending ``|k>`` to ``|perm[k]>``."""
    perm = np.asarray(perm, dtype=int)
    d = perm.size
    p = np.zeros((d, d), dtype=np.complex128)
    p[perm, np.arange(d)] = 1
    return p
