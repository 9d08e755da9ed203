"""Numerical search for a certificate over the co-isometries ``W W* = I_d``.

The objective is the sum of squared diagonal violations

    f(W) = sum_{i != j} sum_k |(W* M_j* M_i W)[k, k]|**2

minimized by Riemannian gradient descent with Armijo backtracking and a polar
retraction, from Haar-random starts.  Structured constructions are tried first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .certs import (
    Certificate,
    StateSet,
    diagonal_overlaps,
    fillmore_zero_diagonal,
    simultaneous_schmidt,
    schmidt_to_certificate,
    verify_arbitrary,
    verify_oneway_certificate,
)
from .matcore import (
    DEFAULT_TOL,
    ShapeError,
    Tolerance,
    as_matrix,
    coisometry_defect,
    dagger,
    fourier_matrix,
    haar_coisometry,
    polar_factor,
)

log = logging.getLogger(__name__)


class ImpossibleByTraceTest(ValueError):
    """The states are not pairwise orthogonal, so no certificate can exist."""


@dataclass(frozen=True)
class SearchConfig:
    r: int | None = None  # None: try d, d+1, ..., 2d
    restarts: int = 32
    max_iters: int = 2000
    step: float = 0.1
    accept_residual: float = 1e-8
    seed: int = 0
    tol: Tolerance = DEFAULT_TOL
    track_defect: bool = True

    def r_schedule(self, d: int) -> list[int]:
        if self.r is not None:
            if self.r < d:
                raise ValueError(f"r = {self.r} is smaller than d = {d}")
            return [self.r]
        return list(range(d, 2 * d + 1))


@dataclass
class SearchResult:
    status: str  # "Found" | "NotFound"
    certificate: Certificate | None = None
    construction: str | None = None
    objective_trace: list[float] = field(default_factory=list)
    restarts_used: int = 0
    best_objective: float = float("inf")
    best_residual: float = float("inf")
    max_coisometry_defect: float = 0.0

    @property
    def found(self) -> bool:
        return self.status == "Found"

    def to_json(self, states: StateSet | None = None) -> dict:
        return {
            "status": self.status,
            "construction": self.construction,
            "certificate": None if self.certificate is None else self.certificate.to_json(states),
            "restarts_used": self.restarts_used,
            "best_objective": self.best_objective,
            "best_residual": self.best_residual,
            "max_coisometry_defect": self.max_coisometry_defect,
            "objective_trace": self.objective_trace,
        }


def _check_w(states: StateSet, w) -> np.ndarray:
    w = as_matrix(w, "W")
    if w.shape[0] != states.d:
        raise ShapeError(f"W must have {states.d} rows, got {w.shape}")
    return w


def _overlaps(states: StateSet, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = states.matrices @ w
    g = np.einsum("jak,iak->ijk", y.conj(), y)
    n = states.n
    g[np.arange(n), np.arange(n), :] = 0
    return y, g


def objective(w, states: StateSet) -> float:
    w = _check_w(states, w)
    _, g = _overlaps(states, w)
    return float(np.sum(np.abs(g) ** 2))


def objective_and_gradient(w, states: StateSet) -> tuple[float, np.ndarray]:
    """Value and Euclidean gradient G, normalized so ``df = Re Tr(G* dW)``."""
    w = _check_w(states, w)
    y, g = _overlaps(states, w)
    # column k of G is 4 sum_{i != j} conj(g_ijk) M_j* M_i w_k
    z = np.einsum("iak,ijk->jak", y, g.conj())
    grad = 4 * np.einsum("jba,jbk->ak", states.matrices.conj(), z)
    return float(np.sum(np.abs(g) ** 2)), grad


def tangent_projection(w: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Project onto the tangent space of ``{W : W W* = I}`` at W."""
    a = grad @ dagger(w)
    return grad - (a + dagger(a)) / 2 @ w


def retract(w: np.ndarray) -> np.ndarray:
    return polar_factor(w)


@dataclass
class _Descent:
    w: np.ndarray
    f: float
    trace: list[float]
    max_defect: float


def _descend(states: StateSet, w0: np.ndarray, cfg: SearchConfig, stop_below: float) -> _Descent:
    w = retract(w0)
    f, g = objective_and_gradient(w, states)
    trace = [f]
    max_defect = coisometry_defect(w) if cfg.track_defect else 0.0
    step = cfg.step
    stall = 0
    for _ in range(cfg.max_iters):
        if f <= stop_below:
            break
        xi = tangent_projection(w, g)
        gnorm2 = float(np.real(np.vdot(xi, xi)))
        if gnorm2 <= 1e-30:
            break
        while True:
            cand = w - step * xi
            try:
                cand = retract(cand)
            except np.linalg.LinAlgError:
                cand = None
            if cand is not None:
                fc, gc = objective_and_gradient(cand, states)
                if fc <= f - 1e-4 * step * gnorm2:
                    break
            step *= 0.5
            if step < 1e-14:
                cand = None
                break
        if cand is None:
            break
        improvement = f - fc
        w, f, g = cand, fc, gc
        trace.append(f)
        if cfg.track_defect:
            max_defect = max(max_defect, coisometry_defect(w))
        step = min(step * 2.0, 10.0)
        # a stuck positive minimum: stop once progress is negligible
        stall = stall + 1 if improvement <= 1e-12 * max(f, 1e-300) else 0
        if stall >= 25:
            break
    return _Descent(w, f, trace, max_defect)


def structured_candidates(states: StateSet, tol: Tolerance = DEFAULT_TOL, seed: int = 0) -> Iterator[tuple[str, np.ndarray]]:
    """Candidate certificates from the structured constructions, in a fixed order."""
    d = states.d
    yield "identity", np.eye(d, dtype=np.complex128)
    yield "schmidt_fourier", fourier_matrix(d)
    dec = simultaneous_schmidt(states, tol, seed=seed)
    if dec is not None:
        yield "schmidt_fourier", schmidt_to_certificate(dec.V, tol).W
    if states.n == 2:
        prod = dagger(states.matrices[1]) @ states.matrices[0]
        try:
            yield "fillmore", fillmore_zero_diagonal(prod, tol)
        except (ValueError, RuntimeError):
            pass
    prods = states.products()
    for i in range(states.n):
        for j in range(i + 1, states.n):
            herm = (prods[i, j] + dagger(prods[i, j])) / 2
            yield "eigenbasis", np.linalg.eigh(herm)[1]


def first_structured(states: StateSet, tol: Tolerance = DEFAULT_TOL, seed: int = 0):
    for name, w in structured_candidates(states, tol, seed):
        check = verify_oneway_certificate(states, w, tol)
        if check.accepted:
            return name, Certificate(w, check.residual)
    return None


def search_certificate(states: StateSet, cfg: SearchConfig = SearchConfig(), structured: bool = True) -> SearchResult:
    """Structured constructions first, then restarted manifold descent.

    ``NotFound`` is advisory: it reports the best residual seen.
    """
    tol = cfg.tol
    if not verify_arbitrary(states, tol):
        raise ImpossibleByTraceTest("states are not pairwise orthogonal; no certificate exists")
    d = states.d
    schedule = cfg.r_schedule(d)
    if structured and (cfg.r is None or cfg.r == d):
        hit = first_structured(states, tol, cfg.seed)
        if hit is not None:
            name, cert = hit
            return SearchResult("Found", cert, name, best_objective=objective(cert.W, states),
                                best_residual=cert.residual)

    seeds = np.random.SeedSequence(cfg.seed).spawn(len(schedule) * cfg.restarts)
    result = SearchResult("NotFound", construction=None)
    stop_below = min(cfg.accept_residual, (0.01 * tol.zero_abs) ** 2)
    best = None  # (residual, index, descent)
    index = 0
    for r in schedule:
        for _ in range(cfg.restarts):
            rng = np.random.default_rng(seeds[index])
            run = _descend(states, haar_coisometry(d, r, rng), cfg, stop_below)
            result.restarts_used += 1
            result.max_coisometry_defect = max(result.max_coisometry_defect, run.max_defect)
            check = verify_oneway_certificate(states, run.w, tol)
            if best is None or check.residual < best[0]:
                best = (check.residual, index, run, check)
            if run.f <= cfg.accept_residual and check.accepted:
                log.debug("found certificate with r=%d after %d restarts", r, result.restarts_used)
                break
            index += 1
        if best is not None and best[2].f <= cfg.accept_residual and best[3].accepted:
            break
    residual, _, run, check = best
    result.objective_trace = run.trace
    result.best_objective = run.f
    result.best_residual = residual
    if run.f <= cfg.accept_residual and check.accepted:
        result.status = "Found"
        result.construction = "numeric_search"
        result.certificate = Certificate(run.w, check.residual)
    return result
