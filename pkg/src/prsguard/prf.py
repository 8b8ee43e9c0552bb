"""Keyed pseudorandom derivations built on SHA-256.

Every derivation hashes ``key || tag || fixed-width fields`` where the tag
byte separates the uses:

    0x01  phase predicate f_k(y)
    0x02  Pauli key schedule k_1..k_T
    0x03  rotation angles of the seeded layered circuit standing in for U
    0x04  key generation from a 64-bit seed (9-byte input, no key prefix)

Keys are 32 bytes and the tag of every keyed input sits at offset 32, so
inputs for different uses can never coincide.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import quantumcore as qc
from .quantumcore import Bits, QuantumState, parse_bits

TAG_PHASE = b"\x01"
TAG_SCHEDULE = b"\x02"
TAG_CIRCUIT = b"\x03"
TAG_KEYGEN = b"\x04"

ROT_Y = b"Y"
ROT_Z = b"Z"

PAULIS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class TrapdoorKey:
    material: bytes

    def __post_init__(self):
        if not isinstance(self.material, (bytes, bytearray)) or len(self.material) != 32:
            raise ValueError("trapdoor key must be exactly 32 bytes")
        object.__setattr__(self, "material", bytes(self.material))

    def hex(self) -> str:
        return self.material.hex()

    @classmethod
    def from_hex(cls, text: str) -> "TrapdoorKey":
        text = text.strip()
        if len(text) != 64:
            raise ValueError("trapdoor key hex must have 64 characters")
        return cls(bytes.fromhex(text))

    def fingerprint(self) -> str:
        """First 8 bytes of SHA-256(key), hex."""
        return hashlib.sha256(self.material).digest()[:8].hex()

    def __repr__(self) -> str:
        return f"TrapdoorKey(fingerprint={self.fingerprint()})"


def gen_trapdoor(seed: int | None = None) -> TrapdoorKey:
    """Fresh key from system entropy, or a reproducible one from a 64-bit seed."""
    if seed is None:
        return TrapdoorKey(secrets.token_bytes(32))
    seed = int(seed)
    if not 0 <= seed < 1 << 64:
        raise ValueError("seed must fit in 64 unsigned bits")
    return TrapdoorKey(hashlib.sha256(TAG_KEYGEN + seed.to_bytes(8, "big")).digest())


def key_from_rng(rng: np.random.Generator) -> TrapdoorKey:
    return TrapdoorKey(rng.bytes(32))


def _pack_bits(bits: tuple[int, ...]) -> bytes:
    n = len(bits)
    nbytes = (n + 7) // 8
    value = qc.bits_to_index(bits) << (8 * nbytes - n)
    return value.to_bytes(nbytes, "big")


def qprf_bit(k: TrapdoorKey, n: int, y: Bits) -> int:
    """LSB of SHA-256(k || 0x01 || n:u16be || y packed MSB-first)."""
    bits = parse_bits(y)
    if len(bits) != n:
        raise ValueError(f"input has {len(bits)} bits, expected {n}")
    digest = hashlib.sha256(
        k.material + TAG_PHASE + n.to_bytes(2, "big") + _pack_bits(bits)
    ).digest()
    return digest[-1] & 1


@lru_cache(maxsize=4096)
def _qprf_table_cached(material: bytes, n: int) -> np.ndarray:
    nbytes = (n + 7) // 8
    shift = 8 * nbytes - n
    prefix = material + TAG_PHASE + n.to_bytes(2, "big")
    sha = hashlib.sha256
    out = np.fromiter(
        (sha(prefix + (y << shift).to_bytes(nbytes, "big")).digest()[-1] & 1
         for y in range(1 << n)),
        dtype=np.int8,
        count=1 << n,
    )
    out.setflags(write=False)
    return out


def qprf_table(k: TrapdoorKey, n: int) -> np.ndarray:
    """``f_k(y)`` for every index ``y`` in ``[0, 2^n)``."""
    return _qprf_table_cached(k.material, qc.check_n_qubits(n))


def phase_oracle_signs(k: TrapdoorKey, n: int) -> np.ndarray:
    """Diagonal of the phase oracle ``|y> -> (-1)^{f_k(y)} |y>``."""
    return 1.0 - 2.0 * qprf_table(k, n)


@dataclass(frozen=True)
class PauliKeySchedule:
    keys: tuple[str, ...]

    @property
    def T(self) -> int:
        return len(self.keys)


def derive_pauli_schedule(k: TrapdoorKey, T: int, n: int | None = None) -> PauliKeySchedule:
    # n is accepted for interface symmetry; the schedule does not depend on it
    if T < 1:
        raise ValueError("schedule length T must be >= 1")
    keys = []
    for i in range(1, T + 1):
        d = hashlib.sha256(k.material + TAG_SCHEDULE + i.to_bytes(4, "big")).digest()
        keys.append(PAULIS[d[0] % 4])
    return PauliKeySchedule(tuple(keys))


def _angle(k: TrapdoorKey, instance: int, layer: int, qubit: int, tag: bytes) -> float:
    d = hashlib.sha256(
        k.material
        + TAG_CIRCUIT
        + instance.to_bytes(4, "big")
        + layer.to_bytes(4, "big")
        + qubit.to_bytes(4, "big")
        + tag
    ).digest()
    return 2 * np.pi * int.from_bytes(d[:8], "big") / 2.0**64


@dataclass(frozen=True, eq=False)
class PRUCircuit:
    """Seeded layered circuit: each layer is RY(alpha) then RZ(beta) on every
    qubit, followed by a ring of controlled-Z gates."""

    n_qubits: int
    alphas: np.ndarray  # (L, n)
    betas: np.ndarray  # (L, n)

    def __post_init__(self):
        # RZ(beta) @ RY(alpha), fused per (layer, qubit)
        ca, sa = np.cos(self.alphas / 2), np.sin(self.alphas / 2)
        em, ep = np.exp(-0.5j * self.betas), np.exp(0.5j * self.betas)
        fused = np.empty(self.alphas.shape + (2, 2), dtype=np.complex128)
        fused[..., 0, 0] = em * ca
        fused[..., 0, 1] = -em * sa
        fused[..., 1, 0] = ep * sa
        fused[..., 1, 1] = ep * ca
        object.__setattr__(self, "_fused", fused)
        object.__setattr__(self, "_ring", qc._cz_ring_diagonal(self.n_qubits))

    @property
    def layers(self) -> int:
        return self.alphas.shape[0]

    def angle_table(self) -> np.ndarray:
        return np.stack([self.alphas, self.betas], axis=-1)

    def _apply(self, amps: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        ring = self._ring if amps.ndim == 1 else self._ring[:, None]
        for layer in range(self.layers):
            for q in range(n):
                amps = qc._apply_1q(amps, n, q, self._fused[layer, q])
            amps = amps * ring
        return amps

    def _apply_inverse(self, amps: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        ring = self._ring if amps.ndim == 1 else self._ring[:, None]
        for layer in reversed(range(self.layers)):
            amps = amps * ring
            for q in range(n):
                amps = qc._apply_1q(amps, n, q, self._fused[layer, q].conj().T)
        return amps

    def apply(self, s: QuantumState) -> QuantumState:
        self._check(s)
        return QuantumState(s.n_qubits, self._apply(s.amplitudes))

    def apply_inverse(self, s: QuantumState) -> QuantumState:
        self._check(s)
        return QuantumState(s.n_qubits, self._apply_inverse(s.amplitudes))

    def unitary(self) -> np.ndarray:
        return self._apply(np.eye(1 << self.n_qubits, dtype=np.complex128))

    def _check(self, s: QuantumState) -> None:
        if s.n_qubits != self.n_qubits:
            raise ValueError(f"circuit acts on {self.n_qubits} qubits, state has {s.n_qubits}")


@lru_cache(maxsize=1024)
def _pru_cached(material: bytes, n: int, L: int, instance: int) -> PRUCircuit:
    k = TrapdoorKey(material)
    alphas = np.array([[_angle(k, instance, l, q, ROT_Y) for q in range(n)] for l in range(L)])
    betas = np.array([[_angle(k, instance, l, q, ROT_Z) for q in range(n)] for l in range(L)])
    alphas.setflags(write=False)
    betas.setflags(write=False)
    return PRUCircuit(n, alphas, betas)


def derive_pru_circuit(k: TrapdoorKey, n: int, L: int = 4, instance: int = 0) -> PRUCircuit:
    if L < 2:
        raise ValueError("circuit depth L must be >= 2")
    return _pru_cached(k.material, qc.check_n_qubits(n), int(L), int(instance))
