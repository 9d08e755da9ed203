"""Executable one-way LOCC protocols built from certificates.

States are ``|psi_i> = vec(M_i) / ||M_i||_F`` with Alice holding the first
tensor factor.  For Alice effect A and Bob effect B,

    <psi|(A (x) B)|psi> = Tr(M* B M conj(A)) / ||M||_F**2

which avoids building d**2-dimensional vectors.  Alice's physical vectors are
the complex conjugates of the certificate columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jsonio
from .certs import AliceMeasurement, Certificate, StateSet, verify_oneway_certificate, w_to_alice
from .matcore import DEFAULT_TOL, Tolerance, dagger

@dataclass(frozen=True)
class Protocol:
    """Alice's rank-one POVM and, per outcome k, Bob's effects.

    ``bob[k]`` has shape (n + 1, d, d): effect j announces state j, the last
    one is the inconclusive remainder.
    """

    alice: AliceMeasurement
    bob: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.bob[0].shape[0] - 1

    def invariant_defects(self) -> dict:
        d = self.alice.d
        eye = np.eye(d)
        bob_completeness = max(float(np.max(np.abs(b.sum(axis=0) - eye))) for b in self.bob)
        min_eig = min(float(np.linalg.eigvalsh(e).min()) for b in self.bob for e in b)
        return {
            "alice_completeness": self.alice.completeness_defect(),
            "bob_completeness": bob_completeness,
            "min_effect_eigenvalue": min_eig,
        }

    def to_json(self) -> dict:
        return {
            "alice": {
                "weights": [float(m) for m in self.alice.weights],
                "vectors": [jsonio.vector_to_json(v) for v in self.alice.vectors],
            },
            "bob": [[jsonio.matrix_to_json(e) for e in effects] for effects in self.bob],
        }

    @classmethod
    def from_json(cls, obj) -> Protocol:
        try:
            alice, bob = obj["alice"], obj["bob"]
            weights = np.array([float(m) for m in alice["weights"]])
            vectors = np.stack([jsonio.vector_from_json(v) for v in alice["vectors"]])
            effects = tuple(np.stack([jsonio.matrix_from_json(e) for e in row]) for row in bob)
        except (KeyError, TypeError, ValueError) as exc:
            raise jsonio.FormatError(f"malformed protocol: {exc}") from None
        if len(effects) != weights.size or vectors.shape[0] != weights.size:
            raise jsonio.FormatError("protocol needs one Bob measurement per Alice outcome")
        return cls(AliceMeasurement(weights, vectors), effects)

    def is_valid(self, tol: float = 1e-9) -> bool:
        defects = self.invariant_defects()
        return (
            defects["alice_completeness"] <= tol
            and defects["bob_completeness"] <= tol
            and defects["min_effect_eigenvalue"] >= -1e-10
        )


def bob_residual_states(states: StateSet, phi) -> np.ndarray:
    """Unnormalized states ``M_i |conj(phi)><conj(phi)| M_i* / d`` Bob holds after
    Alice projects onto phi."""
    phi = np.asarray(phi, dtype=np.complex128)
    v = states.matrices @ phi.conj()  # (n, d)
    return np.einsum("ia,ib->iab", v, v.conj()) / states.d


def _clamp_psd(m: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    m = (m + dagger(m)) / 2
    vals, vecs = np.linalg.eigh(m)
    vals = np.where(vals < floor, np.maximum(vals, 0.0), vals)
    return (vecs * vals) @ dagger(vecs)


def build_protocol(states: StateSet, cert: Certificate, tol: Tolerance = DEFAULT_TOL) -> Protocol:
    check = verify_oneway_certificate(states, cert.W, tol)
    if not check.accepted:
        raise ValueError(f"certificate rejected (residual {check.residual:.3e})")
    meas = w_to_alice(cert, tol)
    # the certificate vectors are conj(a_k); Alice measures a_k
    alice = AliceMeasurement(meas.weights, meas.vectors.conj())
    n, d = states.n, states.d
    eye = np.eye(d, dtype=np.complex128)
    bob = []
    for phi in meas.vectors:
        effects = np.zeros((n + 1, d, d), dtype=np.complex128)
        out = states.matrices @ phi  # Bob's (unnormalized) vectors M_i phi
        norms = np.linalg.norm(out, axis=1)
        scale = max(float(norms.max()), 1.0)
        for i in range(n):
            if norms[i] > tol.zero_abs * scale:
                u = out[i] / norms[i]
                effects[i] = np.outer(u, u.conj())
        effects[n] = _clamp_psd(eye - effects[:n].sum(axis=0))
        bob.append(effects)
    return Protocol(alice, tuple(bob))


def outcome_probabilities(states: StateSet, proto: Protocol) -> np.ndarray:
    """``P[i, k, j]``: probability of Alice outcome k and Bob verdict j given state i.

    Verdict index n is inconclusive.
    """
    mats = states.matrices
    norms2 = np.sum(np.abs(mats) ** 2, axis=(1, 2))
    # conj(A_k) = m_k |conj a_k><conj a_k|, so Tr(M* B M conj(A_k)) = m_k <c|M* B M|c>, c = conj(a_k)
    c = proto.alice.vectors.conj()  # (r, d)
    bob_vecs = np.einsum("iab,kb->ika", mats, c)  # M_i c_k
    bob = np.stack(proto.bob)  # (r, n+1, d, d)
    quad = np.einsum("ika,kjab,ikb->ikj", bob_vecs.conj(), bob, bob_vecs)
    probs = np.real(quad) * proto.alice.weights[None, :, None] / norms2[:, None, None]
    return np.clip(probs, 0.0, None)


def exact_success(states: StateSet, proto: Protocol) -> float:
    probs = outcome_probabilities(states, proto)
    n = states.n
    # rounding can push the sum a few ulps past 1
    return float(np.clip(np.mean([probs[i, :, i].sum() for i in range(n)]), 0.0, 1.0))


@dataclass
class SimulationReport:
    trials: int
    success_count: int
    confusion: np.ndarray  # (n, n) counts, row = true state, column = verdict
    inconclusive: np.ndarray  # (n,) counts
    exact_success: float
    per_state_trials: np.ndarray

    @property
    def frequency(self) -> float:
        return self.success_count / self.trials

    def merge(self, other: SimulationReport) -> SimulationReport:
        return SimulationReport(
            self.trials + other.trials,
            self.success_count + other.success_count,
            self.confusion + other.confusion,
            self.inconclusive + other.inconclusive,
            self.exact_success,
            self.per_state_trials + other.per_state_trials,
        )

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "success_count": self.success_count,
            "frequency": self.frequency,
            "exact_success": self.exact_success,
            "confusion": self.confusion.tolist(),
            "inconclusive": self.inconclusive.tolist(),
            "per_state_trials": self.per_state_trials.tolist(),
        }


def _sample_rows(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def simulate(states: StateSet, proto: Protocol, trials: int, seed: int = 0) -> SimulationReport:
    """Monte-Carlo run: draw a state uniformly, Alice's outcome by the Born rule,
    then Bob's verdict conditioned on it."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    probs = outcome_probabilities(states, proto)
    n = states.n
    which = rng.integers(0, n, size=trials)
    confusion = np.zeros((n, n), dtype=np.int64)
    inconclusive = np.zeros(n, dtype=np.int64)
    per_state = np.bincount(which, minlength=n)
    for i in range(n):
        count = int(per_state[i])
        if count == 0:
            continue
        p_alice = probs[i].sum(axis=1)
        ks = _sample_rows(np.cumsum(p_alice / p_alice.sum()), rng.random(count))
        verdicts = np.empty(count, dtype=np.int64)
        for k in np.unique(ks):
            sel = np.flatnonzero(ks == k)
            p_bob = probs[i, k]
            total = p_bob.sum()
            if total <= 0:
                verdicts[sel] = n
                continue
            verdicts[sel] = _sample_rows(np.cumsum(p_bob / total), rng.random(sel.size))
        counts = np.bincount(verdicts, minlength=n + 1)
        confusion[i] = counts[:n]
        inconclusive[i] = counts[n]
    success = int(np.trace(confusion))
    return SimulationReport(trials, success, confusion, inconclusive, exact_success(states, proto), per_state)
