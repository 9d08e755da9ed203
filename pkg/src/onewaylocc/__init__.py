"""Certificates for one-way LOCC discrimination of bipartite pure states.

A set of states ``(I (x) M_i)|Phi>`` is encoded by its d x d matrices ``M_i``.
"""

from .certs import (
    AliceMeasurement,
    Certificate,
    NotOrthogonalError,
    StateSet,
    certify,
    fillmore_zero_diagonal,
    simultaneous_schmidt,
    two_state_certificate,
    verify_arbitrary,
    verify_oneway_certificate,
)
from .matcore import DEFAULT_TOL, ShapeError, Tolerance
from .search import ImpossibleByTraceTest, SearchConfig, SearchResult, search_certificate
from .simproto import Protocol, build_protocol, exact_success, simulate

__version__ = "0.1.0"

__all__ = [
    "AliceMeasurement",
    "Certificate",
    "DEFAULT_TOL",
    "ImpossibleByTraceTest",
    "NotOrthogonalError",
    "Protocol",
    "SearchConfig",
    "SearchResult",
    "ShapeError",
    "StateSet",
    "Tolerance",
    "build_protocol",
    "certify",
    "exact_success",
    "fillmore_zero_diagonal",
    "search_certificate",
    "simulate",
    "simultaneous_schmidt",
    "two_state_certificate",
    "verify_arbitrary",
    "verify_oneway_certificate",
]
