from __future__ import annotations

import numpy as np
import pytest

from onewaylocc.certs import StateSet
from onewaylocc.matcore import gen_pauli_x, gen_pauli_z


def powers(m, count):
    return [np.linalg.matrix_power(m, k) for k in range(count)]


def shift_family(d):
    return StateSet.from_matrices(powers(gen_pauli_x(d), d))


def clock_pair(d):
    return StateSet.from_matrices([np.eye(d), gen_pauli_z(d)])


def kron_state(m):
    """(I (x) M)|Phi> built explicitly from basis kets, as an independent oracle."""
    d = m.shape[0]
    phi = sum(np.kron(np.eye(d)[k], np.eye(d)[k]) for k in range(d)) / np.sqrt(d)
    psi = np.kron(np.eye(d), m) @ phi
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
