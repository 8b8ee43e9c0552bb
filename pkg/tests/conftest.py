import numpy as np
import pytest
from hypothesis import strategies as st

from prsguard import quantumcore as qc

ACCEPTANCE_LINES: list[str] = []


def bitstrings(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n).map(tuple)
    )


def bit_pairs(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(
            st.lists(st.integers(0, 1), min_size=n, max_size=n).map(tuple),
            st.lists(st.integers(0, 1), min_size=n, max_size=n).map(tuple),
        )
    )


def random_state(n, rng):
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return qc.QuantumState(n, v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
