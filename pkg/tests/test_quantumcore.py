import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prsguard import quantumcore as qc
from prsguard.quantumcore import QuantumState

from conftest import bitstrings, random_state

S2 = 1 / np.sqrt(2)


def kron_all(mats):
    out = np.eye(1)
    for m in mats:
        out = np.kron(out, m)
    return out


def dense_1q(n, q, mat):
    return kron_all([mat if i == q else np.eye(2) for i in range(n)])


def test_basis_state_examples():
    np.testing.assert_array_equal(qc.new_basis_state("0").amplitudes, [1, 0])
    assert np.argmax(qc.new_basis_state("10").amplitudes) == 2
    assert np.argmax(qc.new_basis_state("111").amplitudes) == 7


def test_basis_state_range():
    with pytest.raises(qc.QubitRangeError):
        qc.new_basis_state("")
    with pytest.raises(qc.QubitRangeError):
        qc.new_basis_state("0" * (qc.MAX_QUBITS + 1))


def test_state_invariants():
    with pytest.raises(ValueError):
        QuantumState(1, [1, 1])
    with pytest.raises(ValueError):
        QuantumState(2, [1, 0])
    s = qc.zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0
    assert qc.zero_state(3).n_qubits == 3


def test_gate_must_be_unitary():
    with pytest.raises(ValueError):
        qc.SingleQubitGate([[1, 1], [0, 1]])
    with pytest.raises(ValueError):
        qc.SingleQubitGate(np.eye(3))


def test_single_qubit_gate_examples():
    zero = qc.new_basis_state("0")
    np.testing.assert_allclose(qc.apply_single_qubit_gate(zero, 0, qc.H).amplitudes, [S2, S2])
    np.testing.assert_allclose(qc.apply_single_qubit_gate(zero, 0, qc.X).amplitudes, [0, 1])
    plus = QuantumState(1, [S2, S2])
    np.testing.assert_allclose(qc.apply_single_qubit_gate(plus, 0, qc.Z).amplitudes, [S2, -S2])
    with pytest.raises(qc.QubitRangeError):
        qc.apply_single_qubit_gate(zero, 1, qc.X)


@given(st.integers(1, 6), st.data())
@settings(max_examples=60, deadline=None)
def test_single_qubit_gate_matches_kron(n, data):
    q = data.draw(st.integers(0, n - 1))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    s = random_state(n, rng)
    a, b = rng.uniform(0, 2 * np.pi, 2)
    g = qc.SingleQubitGate(qc.rz_matrix(b) @ qc.ry_matrix(a))
    out = qc.apply_single_qubit_gate(s, q, g)
    np.testing.assert_allclose(out.amplitudes, dense_1q(n, q, g.entries) @ s.amplitudes, atol=1e-12)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_diagonal_phase_examples():
    plus = QuantumState(1, [S2, S2])
    assert np.array_equal(qc.apply_diagonal_phases(plus, lambda y: 1).amplitudes, plus.amplitudes)
    minus = qc.apply_diagonal_phases(plus, lambda y: (-1) ** y)
    np.testing.assert_allclose(minus.amplitudes, [S2, -S2])
    g = qc.apply_diagonal_phases(plus, np.array([1j, 1j]))
    assert abs(abs(qc.inner_product(g, plus)) ** 2 - 1) < 1e-12
    with pytest.raises(ValueError):
        qc.apply_diagonal_phases(plus, lambda y: 2.0)


def test_global_pauli_examples():
    s = random_state(3, np.random.default_rng(0))
    assert np.array_equal(qc.apply_global_pauli(s, "I").amplitudes, s.amplitudes)
    np.testing.assert_array_equal(
        qc.apply_global_pauli(qc.new_basis_state("00"), "X").amplitudes,
        qc.new_basis_state("11").amplitudes,
    )
    np.testing.assert_array_equal(qc.apply_global_pauli(qc.new_basis_state("1"), "Z").amplitudes, [0, -1])


@pytest.mark.parametrize("p", ["I", "X", "Y", "Z"])
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_global_pauli_matches_tensor_power(p, n):
    mat = {"I": qc.I, "X": qc.X, "Y": qc.Y, "Z": qc.Z}[p].entries
    s = random_state(n, np.random.default_rng(n))
    expected = kron_all([mat] * n) @ s.amplitudes
    np.testing.assert_allclose(qc.apply_global_pauli(s, p).amplitudes, expected, atol=1e-12)


def test_hadamard_all_examples():
    for n in (1, 3, 5):
        np.testing.assert_allclose(
            qc.hadamard_all(qc.zero_state(n)).amplitudes, np.full(1 << n, 2 ** (-n / 2))
        )
    np.testing.assert_allclose(qc.hadamard_all(qc.new_basis_state("1")).amplitudes, [S2, -S2])
    s = random_state(4, np.random.default_rng(1))
    back = qc.hadamard_all(qc.hadamard_all(s))
    assert abs(abs(qc.inner_product(back, s)) ** 2 - 1) < 1e-12


def test_inner_product_examples():
    s = random_state(3, np.random.default_rng(2))
    assert abs(qc.inner_product(s, s) - 1) < 1e-9
    assert qc.inner_product(qc.new_basis_state("0"), qc.new_basis_state("1")) == 0
    plus = QuantumState(1, [S2, S2])
    assert abs(qc.inner_product(plus, qc.new_basis_state("0")) - S2) < 1e-15
    with pytest.raises(ValueError):
        qc.inner_product(plus, qc.zero_state(2))


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.integers(1, 25))
@settings(max_examples=40, deadline=None)
def test_random_sequence_round_trip(n, seed, length):
    rng = np.random.default_rng(seed)
    s = random_state(n, rng)
    seq = []
    out = s
    for _ in range(length):
        kind = rng.integers(4)
        if kind == 0:
            q = int(rng.integers(n))
            g = qc.SingleQubitGate(qc.rz_matrix(rng.uniform(0, 7)) @ qc.ry_matrix(rng.uniform(0, 7)))
            out = qc.apply_single_qubit_gate(out, q, g)
            seq.append(lambda st_, q=q, g=g: qc.apply_single_qubit_gate(st_, q, g.dagger()))
        elif kind == 1:
            ph = np.exp(1j * rng.uniform(0, 2 * np.pi, 1 << n))
            out = qc.apply_diagonal_phases(out, ph)
            seq.append(lambda st_, ph=ph: qc.apply_diagonal_phases(st_, ph.conj()))
        elif kind == 2:
            p = "IXYZ"[rng.integers(4)]
            out = qc.apply_global_pauli(out, p)
            seq.append(lambda st_, p=p: qc.apply_global_pauli(st_, p))
        else:
            out = qc.hadamard_all(out)
            seq.append(qc.hadamard_all)
        assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-9
    for undo in reversed(seq):
        out = undo(out)
    assert abs(qc.inner_product(out, s)) ** 2 >= 1 - 1e-9


@given(bitstrings(1, 10))
@settings(max_examples=100, deadline=None)
def test_bit_ordering_round_trip(bits):
    s = qc.new_basis_state(bits)
    assert qc.index_to_bits(int(np.argmax(s.probabilities())), len(bits)) == bits


def test_json_round_trip():
    s = random_state(3, np.random.default_rng(3))
    back = QuantumState.from_json(s.to_json())
    assert np.array_equal(back.amplitudes, s.amplitudes)


def test_parse_bits_rejects_garbage():
    with pytest.raises(ValueError):
        qc.parse_bits("012")
    with pytest.raises(ValueError):
        qc.parse_bits([0, 2])
    assert qc.parse_bits("1 0 1") == (1, 0, 1)
