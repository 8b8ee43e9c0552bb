import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prsguard import prf
from prsguard import quantumcore as qc
from prsguard.metrics import haar_moment

from conftest import random_state

GOLDEN = json.loads((Path(__file__).parent / "fixtures" / "golden_prf.json").read_text())
KEYS = {name: prf.TrapdoorKey.from_hex(h) for name, h in GOLDEN["keys"].items()}


def test_gen_trapdoor_determinism_and_hex():
    assert prf.gen_trapdoor(0) == prf.gen_trapdoor(0)
    assert prf.gen_trapdoor(0) != prf.gen_trapdoor(1)
    k = prf.gen_trapdoor()
    assert prf.TrapdoorKey.from_hex(k.hex()) == k
    assert len(k.hex()) == 64 and k.hex() == k.hex().lower()


def test_key_validation():
    with pytest.raises(ValueError):
        prf.TrapdoorKey(b"short")
    with pytest.raises(ValueError):
        prf.TrapdoorKey.from_hex("ab" * 31)
    with pytest.raises(ValueError):
        prf.gen_trapdoor(-1)
    assert len(prf.gen_trapdoor(5).fingerprint()) == 16


@pytest.mark.parametrize("seed", sorted(GOLDEN["gen_trapdoor"]))
def test_gen_trapdoor_golden(seed):
    assert prf.gen_trapdoor(int(seed)).hex() == GOLDEN["gen_trapdoor"][seed]


@pytest.mark.parametrize("case", [c for c in GOLDEN["phase_bits"] if "bit" in c],
                         ids=lambda c: f"{c['key']}-{c['y']}")
def test_qprf_bit_golden(case):
    k = KEYS[case["key"]]
    assert prf.qprf_bit(k, len(case["y"]), case["y"]) == case["bit"]


@pytest.mark.parametrize("case", [c for c in GOLDEN["phase_bits"] if "bits" in c], ids=lambda c: c["key"])
def test_qprf_table_golden(case):
    table = prf.qprf_table(KEYS[case["key"]], 6)
    assert "".join(map(str, table)) == case["bits"]


def test_qprf_bit_zero_key_vector():
    # the named golden vector: k = 32 zero bytes, y = 000000
    case = next(c for c in GOLDEN["phase_bits"] if c["key"] == "zero" and c["y"] == "000000")
    assert prf.qprf_bit(prf.TrapdoorKey(bytes(32)), 6, "000000") == case["bit"]


def test_qprf_bit_length_mismatch():
    with pytest.raises(ValueError):
        prf.qprf_bit(KEYS["zero"], 6, "0101")


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_table_agrees_with_pointwise(n, seed):
    rng = np.random.default_rng(seed)
    k = prf.key_from_rng(rng)
    table = prf.qprf_table(k, n)
    for y in rng.integers(0, 1 << n, size=8):
        assert table[y] == prf.qprf_bit(k, n, qc.index_to_bits(int(y), n))


def test_qprf_balanced_over_keys():
    rng = np.random.default_rng(11)
    lo, hi = 0.5 - 3 * 0.5 / 8, 0.5 + 3 * 0.5 / 8
    means = np.array([prf.qprf_table(prf.key_from_rng(rng), 6).mean() for _ in range(1000)])
    assert np.mean((means >= lo) & (means <= hi)) >= 0.99


@pytest.mark.parametrize("case", GOLDEN["schedules"], ids=lambda c: c["key"])
def test_schedule_golden(case):
    sched = prf.derive_pauli_schedule(KEYS[case["key"]], case["T"], 4)
    assert "".join(sched.keys) == case["schedule"]
    assert sched.T == case["T"]


def test_schedule_statistics():
    rng = np.random.default_rng(12)
    k, k2 = prf.key_from_rng(rng), prf.key_from_rng(rng)
    s = prf.derive_pauli_schedule(k, 1000, 6).keys
    assert s == prf.derive_pauli_schedule(k, 1000, 6).keys
    band = 3 * np.sqrt(0.25 * 0.75 / 1000)
    for p in "IXYZ":
        assert abs(s.count(p) / 1000 - 0.25) <= band
    s2 = prf.derive_pauli_schedule(k2, 1000, 6).keys
    assert np.mean([a == b for a, b in zip(s, s2)]) < 0.40
    with pytest.raises(ValueError):
        prf.derive_pauli_schedule(k, 0, 6)


@pytest.mark.parametrize("case", GOLDEN["angles"],
                         ids=lambda c: f"{c['key']}-l{c['layer']}q{c['qubit']}")
def test_circuit_angles_golden(case):
    circ = prf.derive_pru_circuit(KEYS[case["key"]], 3, 2, instance=case["instance"])
    table = circ.angle_table()
    assert table[case["layer"], case["qubit"], 0] == case["alpha"]
    assert table[case["layer"], case["qubit"], 1] == case["beta"]


def test_circuit_determinism_and_depth():
    k = KEYS["ramp"]
    a = prf.derive_pru_circuit(k, 5, 4).angle_table()
    prf._pru_cached.cache_clear()
    b = prf.derive_pru_circuit(k, 5, 4).angle_table()
    assert np.array_equal(a, b)
    assert not np.array_equal(a, prf.derive_pru_circuit(k, 5, 4, instance=1).angle_table())
    with pytest.raises(ValueError):
        prf.derive_pru_circuit(k, 5, 1)


def test_circuit_matches_gate_by_gate_construction():
    # independent route: explicit RY, RZ and CZ gates through the public API
    k = KEYS["seed0"]
    n, L = 4, 3
    circ = prf.derive_pru_circuit(k, n, L)
    s0 = random_state(n, np.random.default_rng(0))
    s = s0
    for layer in range(L):
        for q in range(n):
            s = qc.apply_single_qubit_gate(s, q, qc.RY(circ.alphas[layer, q]))
            s = qc.apply_single_qubit_gate(s, q, qc.RZ(circ.betas[layer, q]))
        for q in range(n):
            a, b = q, (q + 1) % n
            s = qc.apply_diagonal_phases(
                s, lambda y, a=a, b=b: -1 if (y >> (n - 1 - a)) & 1 and (y >> (n - 1 - b)) & 1 else 1
            )
    np.testing.assert_allclose(circ.apply(s0).amplitudes, s.amplitudes, atol=1e-12)


@given(st.integers(1, 8), st.integers(2, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_circuit_inverse_round_trip(n, L, seed):
    rng = np.random.default_rng(seed)
    circ = prf.derive_pru_circuit(prf.key_from_rng(rng), n, L)
    s = random_state(n, rng)
    back = circ.apply_inverse(circ.apply(s))
    assert abs(qc.inner_product(back, s)) ** 2 >= 1 - 1e-9


def test_circuit_unitary():
    u = prf.derive_pru_circuit(KEYS["zero"], 4, 4).unitary()
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-12)


def test_circuit_return_probability_matches_haar_mean():
    rng = np.random.default_rng(13)
    zero = qc.zero_state(6)
    vals = np.array([
        abs(prf.derive_pru_circuit(prf.key_from_rng(rng), 6, 4).apply(zero).amplitudes[0]) ** 2
        for _ in range(500)
    ])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - haar_moment(64, 1)) <= 3 * se


def test_domain_separation_is_structural():
    # every keyed input has the tag byte at offset 32; keygen inputs are 9 bytes
    k = KEYS["ramp"].material
    phase_in = k + prf.TAG_PHASE + (6).to_bytes(2, "big") + bytes(1)
    sched_in = k + prf.TAG_SCHEDULE + (1).to_bytes(4, "big")
    circ_in = k + prf.TAG_CIRCUIT + bytes(12) + prf.ROT_Y
    tags = {phase_in[32], sched_in[32], circ_in[32]}
    assert tags == {1, 2, 3}
    assert len(prf.TAG_KEYGEN + bytes(8)) == 9 < min(map(len, (phase_in, sched_in, circ_in)))
