"""Pseudorandom-state encryption of bitstrings and the matching trapdoor inversions.

Three schemes share one interface through :class:`SchemeParams`:

* ``PhasePRS``: ``Z^x |+>^n`` followed by the keyed phase oracle.
* ``ParamPhasePRS``: ``RZ(theta)^x |+>^n`` followed by the same oracle.
* ``BasisPRS``: ``U O_{k_T} U ... O_{k_1} U |x>`` with a key-derived circuit
  ``U`` and Pauli schedule ``k_1..k_T``.

The phase oracle ``|y> -> (-1)^{f_k(y)} |y>`` is what phase kickback through
``U_{f_k}`` with an ancilla in ``|->`` does to the data register, so it is
applied directly as a diagonal.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import quantumcore as qc
from .encodings import (
    FeatureBits,
    _param_phase_amplitudes,
    _phase_amplitudes,
    basis_encode,
    feature_bits,
    feature_weights,
    param_phase_encode,
    phase_encode,
)
from .prf import (
    PRUCircuit,
    TrapdoorKey,
    derive_pauli_schedule,
    derive_pru_circuit,
    phase_oracle_signs,
)
from .quantumcore import Bits, QuantumState

DECODE_THRESHOLD = 0.99


class Scheme(str, enum.Enum):
    PHASE = "PhasePRS"
    PARAM_PHASE = "ParamPhasePRS"
    BASIS = "BasisPRS"


class NoDecodableIndex(ValueError):
    """No basis index carries the expected mass after undoing the encryption."""


@dataclass(frozen=True)
class SchemeParams:
    scheme: Scheme
    theta: tuple[float, ...] | None = None
    T: int | None = None
    L: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.scheme is Scheme.PARAM_PHASE:
            if self.theta is None:
                raise ValueError("ParamPhasePRS requires theta")
            object.__setattr__(self, "theta", tuple(float(t) for t in feature_weights(self.theta)))
        elif self.theta is not None:
            raise ValueError(f"{self.scheme.value} takes no theta")
        if self.scheme is Scheme.BASIS:
            if self.T is None or self.L is None:
                raise ValueError("BasisPRS requires T and L")
            if self.T < 1:
                raise ValueError("BasisPRS requires T >= 1")
            if self.L < 2:
                raise ValueError("BasisPRS requires L >= 2")
        elif self.T is not None or self.L is not None:
            raise ValueError(f"{self.scheme.value} takes no T/L")

    @classmethod
    def phase(cls) -> "SchemeParams":
        return cls(Scheme.PHASE)

    @classmethod
    def param_phase(cls, theta: Sequence[float]) -> "SchemeParams":
        return cls(Scheme.PARAM_PHASE, theta=tuple(theta))

    @classmethod
    def basis(cls, T: int, L: int = 4) -> "SchemeParams":
        return cls(Scheme.BASIS, T=int(T), L=int(L))

    @classmethod
    def default_for(cls, scheme: str | Scheme, n: int, theta=None) -> "SchemeParams":
        """Default parameters: T = 2n, L = 4 for the basis scheme."""
        scheme = Scheme(scheme)
        if scheme is Scheme.BASIS:
            return cls.basis(2 * n, 4)
        if scheme is Scheme.PARAM_PHASE:
            return cls.param_phase(theta)
        return cls.phase()

    def params_json(self) -> dict[str, Any] | None:
        if self.scheme is Scheme.PARAM_PHASE:
            return {"theta": list(self.theta)}
        if self.scheme is Scheme.BASIS:
            return {"T": self.T, "L": self.L}
        return None

    @classmethod
    def from_json(cls, scheme: str, params: dict[str, Any] | None) -> "SchemeParams":
        params = params or {}
        return cls(
            Scheme(scheme),
            theta=tuple(params["theta"]) if "theta" in params else None,
            T=params.get("T"),
            L=params.get("L"),
        )


@dataclass(frozen=True, eq=False)
class EncryptedSample:
    scheme: Scheme
    state: QuantumState
    key_fingerprint: str
    params: dict[str, Any] | None = field(default=None)

    @property
    def n(self) -> int:
        return self.state.n_qubits

    def to_json(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme.value,
            "n": self.n,
            "key_fingerprint": self.key_fingerprint,
            "params": self.params,
            "amplitudes": self.state.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "EncryptedSample":
        state = QuantumState.from_json(doc["amplitudes"])
        if state.n_qubits != doc["n"]:
            raise ValueError("amplitude count does not match n")
        SchemeParams.from_json(doc["scheme"], doc.get("params"))  # validates params
        return cls(Scheme(doc["scheme"]), state, doc["key_fingerprint"], doc.get("params"))


# --------------------------------------------------------------------------
# QTF primitives


def gen_eval(k: TrapdoorKey, n: int) -> QuantumState:
    """Public evaluation state ``2^{-n/2} sum_y (-1)^{f_k(y)} |y>``."""
    n = qc.check_n_qubits(n)
    return QuantumState(n, phase_oracle_signs(k, n).astype(np.complex128) / np.sqrt(1 << n))


def qtf_eval(eval_state: QuantumState, x: Bits) -> QuantumState:
    """Z-twirl ``Z^x`` applied to the evaluation state."""
    bits = feature_bits(x)
    if len(bits) != eval_state.n_qubits:
        raise ValueError(f"x has {len(bits)} bits, state has {eval_state.n_qubits} qubits")
    signs = qc._parity_phases(eval_state.n_qubits, qc.bits_to_index(bits))
    return QuantumState(eval_state.n_qubits, eval_state.amplitudes * signs)


# --------------------------------------------------------------------------
# encryption


def _basis_chain(amps: np.ndarray, n: int, U: PRUCircuit, schedule: Sequence[str]) -> np.ndarray:
    amps = U._apply(amps)
    for p in schedule:
        amps = U._apply(qc._global_pauli(amps, n, p))
    return amps


def _basis_chain_inverse(amps: np.ndarray, n: int, U: PRUCircuit, schedule: Sequence[str]) -> np.ndarray:
    amps = U._apply_inverse(amps)
    for p in reversed(schedule):
        # every P^{(x)n} is Hermitian, so it is its own adjoint
        amps = U._apply_inverse(qc._global_pauli(amps, n, p))
    return amps


def encrypt_phase(x: Bits, k: TrapdoorKey) -> EncryptedSample:
    bits = feature_bits(x)
    n = qc.check_n_qubits(len(bits))
    amps = _phase_amplitudes(bits) * phase_oracle_signs(k, n)
    return EncryptedSample(Scheme.PHASE, QuantumState(n, amps), k.fingerprint())


def encrypt_param_phase(x: Bits, theta: Sequence[float], k: TrapdoorKey) -> EncryptedSample:
    bits = feature_bits(x)
    n = qc.check_n_qubits(len(bits))
    th = feature_weights(theta, n)
    amps = _param_phase_amplitudes(bits, th) * phase_oracle_signs(k, n)
    return EncryptedSample(
        Scheme.PARAM_PHASE, QuantumState(n, amps), k.fingerprint(), {"theta": th.tolist()}
    )


def encrypt_basis(x: Bits, k: TrapdoorKey, T: int, L: int = 4) -> EncryptedSample:
    if T < 1:
        raise ValueError("BasisPRS requires T >= 1")
    if L < 2:
        raise ValueError("BasisPRS requires L >= 2")
    phi = basis_encode(x)
    n = phi.n_qubits
    U = derive_pru_circuit(k, n, L, instance=0)
    schedule = derive_pauli_schedule(k, T, n).keys
    amps = _basis_chain(phi.amplitudes, n, U, schedule)
    return EncryptedSample(
        Scheme.BASIS, QuantumState(n, amps), k.fingerprint(), {"T": int(T), "L": int(L)}
    )


def encrypt(x: Bits, k: TrapdoorKey, params: SchemeParams) -> EncryptedSample:
    if params.scheme is Scheme.PHASE:
        return encrypt_phase(x, k)
    if params.scheme is Scheme.PARAM_PHASE:
        return encrypt_param_phase(x, params.theta, k)
    return encrypt_basis(x, k, params.T, params.L)


def plain_encode(x: Bits, params: SchemeParams) -> QuantumState:
    """The unencrypted encoding each scheme starts from."""
    if params.scheme is Scheme.PHASE:
        return phase_encode(x)
    if params.scheme is Scheme.PARAM_PHASE:
        return param_phase_encode(x, params.theta)
    return basis_encode(x)


def decrypt_to_plain(s: QuantumState, k: TrapdoorKey, params: SchemeParams) -> QuantumState:
    """Undo the keyed part of the encryption, leaving the plain encoding."""
    n = s.n_qubits
    if params.scheme is Scheme.BASIS:
        U = derive_pru_circuit(k, n, params.L, instance=0)
        schedule = derive_pauli_schedule(k, params.T, n).keys
        return QuantumState(n, _basis_chain_inverse(s.amplitudes, n, U, schedule))
    return QuantumState(n, s.amplitudes * phase_oracle_signs(k, n))


# --------------------------------------------------------------------------
# inversion


def _read_dominant(s: QuantumState) -> FeatureBits:
    idx = qc.dominant_index(s, DECODE_THRESHOLD)
    if idx is None:
        peak = float(s.probabilities().max())
        raise NoDecodableIndex(
            f"no basis index exceeds {DECODE_THRESHOLD} (peak mass {peak:.4f}); "
            "wrong key or malformed state"
        )
    return qc.index_to_bits(idx, s.n_qubits)


def invert_phase(k: TrapdoorKey, s: QuantumState) -> FeatureBits:
    plain = decrypt_to_plain(s, k, SchemeParams.phase())
    return _read_dominant(qc.hadamard_all(plain))


def invert_basis(k: TrapdoorKey, T: int, L: int, s: QuantumState) -> FeatureBits:
    return _read_dominant(decrypt_to_plain(s, k, SchemeParams.basis(T, L)))


def helstrom_basis(theta_i: float) -> tuple[np.ndarray, float]:
    """Optimal measurement separating ``|+>`` from ``RZ(theta_i)|+>``.

    Returns a unitary whose row 1 is the eigenvector for "bit = 1" and the
    success probability ``(1 + |sin(theta_i/2)|) / 2``.
    """
    a0 = np.array([1, 1], dtype=np.complex128) / np.sqrt(2)
    a1 = np.array([np.exp(-0.5j * theta_i), np.exp(0.5j * theta_i)]) / np.sqrt(2)
    gamma = np.outer(a1, a1.conj()) - np.outer(a0, a0.conj())
    evals, evecs = np.linalg.eigh(gamma)
    # eigh sorts ascending: column 0 favours bit 0, column 1 favours bit 1
    measure = evecs.conj().T
    p = 0.5 * (1 + 0.5 * float(np.abs(evals).sum()))
    return measure, p


def invert_param_phase(
    k: TrapdoorKey,
    theta: Sequence[float],
    s: QuantumState,
    rng: np.random.Generator | None = None,
) -> tuple[FeatureBits, np.ndarray]:
    """Decode a weighted-phase ciphertext with per-qubit Helstrom measurements.

    A single copy is measured, so the outcome is random: bit ``i`` comes out
    right with probability ``p_i = (1 + |sin(theta_i / 2)|) / 2``. Returns the
    sampled bits and the vector ``p``.
    """
    n = s.n_qubits
    th = feature_weights(theta, n)
    rng = np.random.default_rng() if rng is None else rng
    amps = decrypt_to_plain(s, k, SchemeParams.param_phase(th)).amplitudes
    probs = np.empty(n)
    for q in range(n):
        measure, probs[q] = helstrom_basis(th[q])
        amps = qc._apply_1q(amps, n, q, measure)
    outcome = np.abs(amps) ** 2
    idx = int(rng.choice(outcome.shape[0], p=outcome / outcome.sum()))
    return qc.index_to_bits(idx, n), probs
