"""Pure-state distances, Haar sampling and overlap-moment statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import quantumcore as qc
from .encodings import FeatureBits
from .prf import TrapdoorKey, key_from_rng, phase_oracle_signs
from .prs import SchemeParams, encrypt, plain_encode
from .quantumcore import Bits, QuantumState

FIDELITY_TOL = 1e-9

EnsembleSampler = Callable[[np.random.Generator], QuantumState]


def fidelity(a: QuantumState, b: QuantumState) -> float:
    value = abs(qc.inner_product(a, b)) ** 2
    if value < -FIDELITY_TOL or value > 1 + FIDELITY_TOL:
        raise ValueError(f"fidelity {value!r} outside [0, 1] beyond tolerance")
    return min(max(value, 0.0), 1.0)


def trace_distance_pure(a: QuantumState, b: QuantumState) -> float:
    return math.sqrt(1.0 - fidelity(a, b))


def invariance_delta(x: Bits, x2: Bits, params: SchemeParams, k: TrapdoorKey) -> float:
    """``|F(enc x, enc x2) - F(plain x, plain x2)|`` for one scheme and key."""
    enc = fidelity(encrypt(x, k, params).state, encrypt(x2, k, params).state)
    plain = fidelity(plain_encode(x, params), plain_encode(x2, params))
    return abs(enc - plain)


def trace_distance_delta(x: Bits, x2: Bits, params: SchemeParams, k: TrapdoorKey) -> float:
    enc = trace_distance_pure(encrypt(x, k, params).state, encrypt(x2, k, params).state)
    plain = trace_distance_pure(plain_encode(x, params), plain_encode(x2, params))
    return abs(enc - plain)


def haar_sample(n: int, rng: np.random.Generator) -> QuantumState:
    n = qc.check_n_qubits(n)
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return QuantumState(n, v / np.linalg.norm(v))


def haar_moment(d: int, t: int) -> float:
    """``E |<psi|phi>|^{2t}`` for independent Haar states in dimension ``d``."""
    if d < 2 or t < 1:
        raise ValueError(f"need d >= 2 and t >= 1, got d={d}, t={t}")
    return 1.0 / math.comb(d + t - 1, t)


def binary_phase_moment(d: int, t: int) -> float:
    """``E |<psi|phi>|^{2t}`` for independent random-sign states ``d^{-1/2} sum_y (-1)^{r(y)} |y>``.

    The overlap is ``S/d`` with ``S`` a sum of ``d`` fair signs, so this is
    ``E[S^{2t}] / d^{2t}``; ``E[S^{2t}]`` is computed from the binomial law.
    """
    if d < 1 or t < 1:
        raise ValueError(f"need d >= 1 and t >= 1, got d={d}, t={t}")
    total = sum(math.comb(d, j) * (d - 2 * j) ** (2 * t) for j in range(d + 1))
    return total / (2**d * d ** (2 * t))


@dataclass(frozen=True)
class MomentEstimate:
    t: int
    mean: float
    std_error: float
    num_samples: int

    def z_score(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.inf
        return (self.mean - reference) / self.std_error

    def within(self, reference: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - reference) <= sigmas * self.std_error

    def to_json(self, reference: float | None = None) -> dict:
        out = asdict(self)
        if reference is not None:
            out["reference_value"] = reference
            out["z_score"] = self.z_score(reference)
        return out


# --------------------------------------------------------------------------
# ensembles


def haar_ensemble(n: int) -> EnsembleSampler:
    return lambda rng: haar_sample(n, rng)


def phase_prs_ensemble(n: int) -> EnsembleSampler:
    """Evaluation states ``|eval_k>`` over uniformly random keys."""

    def sample(rng):
        k = key_from_rng(rng)
        return QuantumState(n, phase_oracle_signs(k, n).astype(np.complex128) / np.sqrt(1 << n))

    return sample


def random_function_ensemble(n: int) -> EnsembleSampler:
    """Binary-phase states with a truly random predicate in place of ``f_k``."""

    def sample(rng):
        signs = 1.0 - 2.0 * rng.integers(0, 2, size=1 << n)
        return QuantumState(n, signs.astype(np.complex128) / np.sqrt(1 << n))

    return sample


def pru_orbit_ensemble(n: int, L: int = 4, start: Bits | None = None) -> EnsembleSampler:
    """``U_k |start>`` over random keys for the seeded layered circuit."""
    from .prf import derive_pru_circuit

    s0 = qc.zero_state(n) if start is None else qc.new_basis_state(start)

    def sample(rng):
        return derive_pru_circuit(key_from_rng(rng), n, L).apply(s0)

    return sample


def fixed_state_ensemble(state: QuantumState) -> EnsembleSampler:
    return lambda rng: state


def _overlap_powers(e1, e2, t, count, rng) -> np.ndarray:
    out = np.empty(count)
    for i in range(count):
        a, b = e1(rng), e2(rng)
        if a.n_qubits != b.n_qubits:
            raise ValueError("ensembles produce states of different dimension")
        out[i] = fidelity(a, b) ** t
    return out


def cross_moment_estimate(
    e1: EnsembleSampler,
    e2: EnsembleSampler,
    t: int,
    num_pairs: int,
    rng: np.random.Generator | int | None = None,
) -> MomentEstimate:
    """Mean and standard error of ``|<psi1|psi2>|^{2t}`` over independent pairs."""
    if num_pairs < 100:
        raise ValueError("num_pairs must be >= 100")
    rng = np.random.default_rng(rng)
    vals = _overlap_powers(e1, e2, t, num_pairs, rng)
    return MomentEstimate(t, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(num_pairs)), num_pairs)


@dataclass(frozen=True)
class DistinguisherResult:
    advantage: float
    rate_1: float
    rate_2: float
    std_error: float
    threshold: float
    num_samples: int


def distinguisher_test(
    e1: EnsembleSampler,
    e2: EnsembleSampler,
    statistic: str = "moment_t1",
    num_samples: int = 1000,
    rng: np.random.Generator | int | None = None,
    pairs_per_trial: int = 16,
) -> DistinguisherResult:
    """Threshold test on an overlap-moment estimate.

    Each trial draws ``pairs_per_trial`` state pairs from one ensemble and
    computes the sample moment ``mean |<a|b>|^{2t}``. The threshold sits
    halfway between the two ensembles' means, fitted on a separate
    calibration run of ``num_samples`` trials each. The test then guesses
    "ensemble 1" whenever the statistic exceeds the threshold on
    ``num_samples`` fresh trials per ensemble.
    """
    if num_samples < 100:
        raise ValueError("num_samples must be >= 100")
    t = {"moment_t1": 1, "moment_t2": 2}[statistic]
    rng = np.random.default_rng(rng)

    def trial_stats(e):
        return np.array([
            _overlap_powers(e, e, t, pairs_per_trial, rng).mean() for _ in range(num_samples)
        ])

    threshold = 0.5 * (trial_stats(e1).mean() + trial_stats(e2).mean())
    r1 = float(np.mean(trial_stats(e1) > threshold))
    r2 = float(np.mean(trial_stats(e2) > threshold))
    se = math.sqrt((r1 * (1 - r1) + r2 * (1 - r2)) / num_samples)
    return DistinguisherResult(abs(r1 - r2), r1, r2, se, float(threshold), num_samples)


def distinguisher_advantage(
    e1: EnsembleSampler,
    e2: EnsembleSampler,
    statistic: str = "moment_t1",
    num_samples: int = 1000,
    rng: np.random.Generator | int | None = None,
    pairs_per_trial: int = 16,
) -> float:
    return distinguisher_test(e1, e2, statistic, num_samples, rng, pairs_per_trial).advantage
