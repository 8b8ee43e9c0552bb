"""Dense statevector simulation.

Convention: qubit 0 is the most significant bit of the basis index, so the
bitstring "10" lives at index 2. Amplitude arrays reshape to ``(2,) * n`` in
C order with axis ``q`` belonging to qubit ``q``.

The public functions take and return immutable :class:`QuantumState` values.
The underscore-prefixed kernels work on raw arrays of shape ``(2**n,)`` or
``(2**n, batch)`` and are what the hot loops in the other modules call.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np

MAX_QUBITS = 14

NORM_TOL = 1e-9
UNITARY_TOL = 1e-12

Bits = Union[str, Sequence[int]]


class QubitRangeError(ValueError):
    pass


def check_n_qubits(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise QubitRangeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n!r}")
    return int(n)


def bits_to_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(idx: int, n: int) -> tuple[int, ...]:
    return tuple((idx >> (n - 1 - q)) & 1 for q in range(n))


def parse_bits(x: Bits) -> tuple[int, ...]:
    """Normalise ``"0110"`` or ``[0, 1, 1, 0]`` to a tuple of ints."""
    if isinstance(x, str):
        out = tuple(int(c) for c in x if not c.isspace())
        if any(c not in "01" for c in x if not c.isspace()):
            raise ValueError(f"bitstring may only contain 0/1: {x!r}")
        return out
    out = tuple(int(b) for b in x)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"bits must be 0/1: {x!r}")
    return out


def popcount_parity(values: np.ndarray) -> np.ndarray:
    """Parity (0/1) of the popcount of each integer in ``values``."""
    return (np.bitwise_count(np.asarray(values, dtype=np.uint64)) & 1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class QuantumState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = check_n_qubits(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True).reshape(-1)
        if amps.shape[0] != 1 << n:
            raise ValueError(f"expected {1 << n} amplitudes, got {amps.shape[0]}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised: <psi|psi> = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_json(self) -> list[list[float]]:
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]

    @classmethod
    def from_json(cls, pairs: Iterable[Sequence[float]]) -> "QuantumState":
        amps = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
        n = int(round(np.log2(len(amps)))) if len(amps) else 0
        return cls(n, amps)

    def __repr__(self) -> str:
        return f"QuantumState(n_qubits={self.n_qubits})"


def _wrap(n: int, amps: np.ndarray) -> QuantumState:
    return QuantumState(n, amps)


@dataclass(frozen=True, eq=False)
class SingleQubitGate:
    entries: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128, copy=True)
        if m.shape != (2, 2):
            raise ValueError(f"single-qubit gate must be 2x2, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(2), rtol=0, atol=UNITARY_TOL):
            raise ValueError(f"gate {self.name or m!r} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def dagger(self) -> "SingleQubitGate":
        return SingleQubitGate(self.entries.conj().T, name=f"{self.name}^dag")


_S2 = 1 / np.sqrt(2)
I = SingleQubitGate(np.eye(2), "I")
H = SingleQubitGate([[_S2, _S2], [_S2, -_S2]], "H")
X = SingleQubitGate([[0, 1], [1, 0]], "X")
Y = SingleQubitGate([[0, -1j], [1j, 0]], "Y")
Z = SingleQubitGate([[1, 0], [0, -1]], "Z")


def ry_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(angle: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=np.complex128
    )


def RY(angle: float) -> SingleQubitGate:
    return SingleQubitGate(ry_matrix(angle), f"RY({angle:.6g})")


def RZ(angle: float) -> SingleQubitGate:
    return SingleQubitGate(rz_matrix(angle), f"RZ({angle:.6g})")


# --------------------------------------------------------------------------
# raw kernels


def _apply_1q(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix to qubit ``q``; ``amps`` may carry a trailing batch axis."""
    psi = np.ascontiguousarray(amps).reshape(1 << q, 2, -1)
    return np.matmul(mat, psi).reshape(amps.shape)


def _hadamard_all(amps: np.ndarray, n: int) -> np.ndarray:
    out = amps
    for q in range(n):
        out = _apply_1q(out, n, q, H.entries)
    return out


def _parity_phases(n: int, mask: int) -> np.ndarray:
    """``(-1)^{mask . y}`` for every index ``y``, as float signs."""
    par = popcount_parity(np.arange(1 << n, dtype=np.uint64) & np.uint64(mask))
    return 1.0 - 2.0 * par


def _popcount_signs(n: int) -> np.ndarray:
    return 1.0 - 2.0 * popcount_parity(np.arange(1 << n, dtype=np.uint64))


def _global_pauli(amps: np.ndarray, n: int, p: str) -> np.ndarray:
    if p == "I":
        return amps
    if p == "X":
        return amps[::-1].copy()
    signs = _popcount_signs(n)
    if amps.ndim > 1:
        signs = signs[:, None]
    if p == "Z":
        return amps * signs
    if p == "Y":
        # Y|b> = i(-1)^b |1-b>, so Y^{(x)n}|y> = i^n (-1)^{|y|} |~y>
        return ((1j) ** n) * (amps * signs)[::-1]
    raise ValueError(f"unknown Pauli {p!r}")


@lru_cache(maxsize=None)
def _cz_ring_diagonal(n: int) -> np.ndarray:
    """Diagonal of the controlled-Z ring on pairs (q, q+1 mod n), duplicates dropped."""
    pairs = sorted({tuple(sorted((q, (q + 1) % n))) for q in range(n) if n > 1})
    idx = np.arange(1 << n, dtype=np.int64)
    diag = np.ones(1 << n)
    for a, b in pairs:
        both = ((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)
        diag = diag * (1.0 - 2.0 * both)
    diag.setflags(write=False)
    return diag


# --------------------------------------------------------------------------
# public operations


def new_basis_state(x: Bits) -> QuantumState:
    bits = parse_bits(x)
    n = check_n_qubits(len(bits))
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[bits_to_index(bits)] = 1.0
    return _wrap(n, amps)


def zero_state(n: int) -> QuantumState:
    return new_basis_state([0] * check_n_qubits(n))


def apply_single_qubit_gate(s: QuantumState, q: int, g: SingleQubitGate) -> QuantumState:
    if not 0 <= q < s.n_qubits:
        raise QubitRangeError(f"qubit {q} out of range for {s.n_qubits} qubits")
    return _wrap(s.n_qubits, _apply_1q(s.amplitudes, s.n_qubits, q, g.entries))


def apply_diagonal_phases(
    s: QuantumState, phase: Union[Callable[[int], complex], np.ndarray]
) -> QuantumState:
    """Multiply amplitude ``y`` by ``phase(y)``.

    ``phase`` is either a callable on indices or a precomputed array of
    length ``2**n``. Every value must have unit modulus.
    """
    if callable(phase):
        values = np.array([phase(y) for y in range(s.dim)], dtype=np.complex128)
    else:
        values = np.asarray(phase, dtype=np.complex128)
        if values.shape != (s.dim,):
            raise ValueError(f"phase table must have length {s.dim}")
    if np.any(np.abs(np.abs(values) - 1.0) > UNITARY_TOL):
        raise ValueError("diagonal phases must have unit modulus")
    return _wrap(s.n_qubits, s.amplitudes * values)


def apply_global_pauli(s: QuantumState, p: str) -> QuantumState:
    """Apply ``P^{(x)n}`` for ``p`` in I, X, Y, Z."""
    return _wrap(s.n_qubits, _global_pauli(s.amplitudes, s.n_qubits, p))


def hadamard_all(s: QuantumState) -> QuantumState:
    return _wrap(s.n_qubits, _hadamard_all(s.amplitudes, s.n_qubits))


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def dominant_index(s: QuantumState, threshold: float = 0.99) -> int | None:
    """Index holding more than ``threshold`` probability mass, if any."""
    probs = s.probabilities()
    idx = int(np.argmax(probs))
    return idx if probs[idx] > threshold else None
