"""Classical bitstrings to quantum states: basis, phase and weighted-phase encodings."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .quantumcore import (
    Bits,
    QuantumState,
    _parity_phases,
    bits_to_index,
    check_n_qubits,
    new_basis_state,
    parse_bits,
)

FeatureBits = tuple[int, ...]


def feature_bits(x: Bits, n: int | None = None) -> FeatureBits:
    bits = parse_bits(x)
    if n is not None and len(bits) != n:
        raise ValueError(f"expected {n} bits, got {len(bits)}")
    return bits


def feature_weights(theta: Sequence[float], n: int | None = None) -> np.ndarray:
    """Validate a weight vector: one angle per bit, each strictly inside (0, 2pi)."""
    arr = np.asarray(theta, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"theta has {arr.shape[0]} entries, expected {n}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0) or np.any(arr >= 2 * np.pi):
        raise ValueError("each theta_i must lie in the open interval (0, 2pi)")
    return arr


def basis_encode(x: Bits) -> QuantumState:
    return new_basis_state(feature_bits(x))


def _phase_amplitudes(bits: FeatureBits) -> np.ndarray:
    n = len(bits)
    return _parity_phases(n, bits_to_index(bits)).astype(np.complex128) / np.sqrt(1 << n)


def phase_encode(x: Bits) -> QuantumState:
    """``Z^x |+>^n``: amplitude ``2^{-n/2} (-1)^{x.y}`` at index ``y``."""
    bits = feature_bits(x)
    n = check_n_qubits(len(bits))
    return QuantumState(n, _phase_amplitudes(bits))


def _param_phase_amplitudes(bits: FeatureBits, theta: np.ndarray) -> np.ndarray:
    amps = np.ones(1, dtype=np.complex128)
    for b, t in zip(bits, theta):
        half = 0.5 * b * t
        qubit = np.array([np.exp(-1j * half), np.exp(1j * half)]) / np.sqrt(2)
        amps = np.kron(amps, qubit)
    return amps


def param_phase_encode(x: Bits, theta: Sequence[float]) -> QuantumState:
    """``RZ(theta)^x |+>^n`` with ``RZ(t) = diag(e^{-it/2}, e^{it/2})``."""
    bits = feature_bits(x)
    n = check_n_qubits(len(bits))
    th = feature_weights(theta, n)
    return QuantumState(n, _param_phase_amplitudes(bits, th))


def param_phase_fidelity(x: Bits, x2: Bits, theta: Sequence[float]) -> float:
    """Closed form ``prod_i cos^2(theta_i (x_i - x2_i) / 2)``."""
    a, b = np.asarray(parse_bits(x)), np.asarray(parse_bits(x2))
    th = feature_weights(theta, len(a))
    return float(np.prod(np.cos(th * (a - b) / 2) ** 2))


def binarize(values: Sequence[float], threshold: float | None = None) -> FeatureBits:
    """Threshold real features into bits; the default threshold is the median."""
    arr = np.asarray(values, dtype=float)
    t = float(np.median(arr)) if threshold is None else threshold
    return tuple(int(v > t) for v in arr)
