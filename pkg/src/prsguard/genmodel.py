"""Toy adversarial training on encrypted states.

A product-Bernoulli generator proposes bitstrings. Real and generated samples
are encrypted under one trapdoor key and handed to a discriminator that only
ever sees the encrypted states:

* ``FidelityDisc`` scores a pair of states by their fidelity. It has no
  parameters and exists to check that training signals are unchanged by
  encryption.
* ``VariationalDisc`` runs a trainable rotation circuit on one state and
  reports ``(1 + <Z_0>) / 2``.

Scores are exact expectation values unless ``shots`` is set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Iterator, Sequence

import numpy as np

from . import quantumcore as qc
from .encodings import FeatureBits, feature_bits
from .metrics import fidelity
from .prf import TrapdoorKey, key_from_rng
from .prs import EncryptedSample, SchemeParams, encrypt, plain_encode
from .quantumcore import QuantumState

FIDELITY_DISC = "FidelityDisc"
VARIATIONAL_DISC = "VariationalDisc"

LOG_CLAMP = 1e-12


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class GeneratorParams:
    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float).copy()
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("generator logits must be finite")

    @property
    def probs(self) -> np.ndarray:
        return _sigmoid(self.logits)

    def to_json(self) -> dict:
        return {"logits": self.logits.tolist()}


@dataclass
class DiscriminatorParams:
    kind: str
    angles: np.ndarray | None = None  # (D, n, 2): RY angle, RZ angle

    def __post_init__(self):
        if self.kind == FIDELITY_DISC:
            if self.angles is not None:
                raise ValueError("FidelityDisc has no parameters")
        elif self.kind == VARIATIONAL_DISC:
            self.angles = np.asarray(self.angles, dtype=float).copy()
            if self.angles.ndim != 3 or self.angles.shape[0] < 1 or self.angles.shape[2] != 2:
                raise ValueError("VariationalDisc angles must have shape (D >= 1, n, 2)")
        else:
            raise ValueError(f"unknown discriminator kind {self.kind!r}")

    @classmethod
    def variational(cls, n: int, depth: int, rng: np.random.Generator | None = None):
        if rng is None:
            return cls(VARIATIONAL_DISC, np.zeros((depth, n, 2)))
        return cls(VARIATIONAL_DISC, rng.uniform(0, 2 * np.pi, size=(depth, n, 2)))

    def to_json(self) -> dict:
        return {"kind": self.kind, "angles": None if self.angles is None else self.angles.tolist()}


@dataclass
class TrainConfig:
    n: int
    dataset: Sequence[FeatureBits]
    scheme: SchemeParams = field(default_factory=SchemeParams.phase)
    disc_kind: str = VARIATIONAL_DISC
    depth: int = 1
    batch_size: int = 8
    steps: int = 100
    learning_rate: float = 0.1
    seed: int = 0
    grad_method: str = "parameter_shift"
    fd_step: float = 1e-5
    shots: int = 0
    encrypted: bool = True
    rekey_per_batch: bool = False

    def __post_init__(self):
        self.dataset = [feature_bits(x, self.n) for x in self.dataset]
        if not self.dataset:
            raise ValueError("dataset must not be empty")
        if self.batch_size < 1 or self.steps < 0 or self.depth < 1:
            raise ValueError("need batch_size >= 1, steps >= 0, depth >= 1")
        if self.grad_method not in ("parameter_shift", "finite_difference"):
            raise ValueError(f"unknown gradient method {self.grad_method!r}")
        if self.grad_method == "finite_difference" and not self.fd_step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")


@dataclass
class TrainHistory:
    records: list[dict[str, Any]] = field(default_factory=list)
    generator: GeneratorParams | None = None
    discriminator: DiscriminatorParams | None = None
    key_fingerprint: str | None = None

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records])

    def iter_jsonl(self) -> Iterator[str]:
        for r in self.records:
            yield json.dumps(r, sort_keys=True)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _clamp(p):
    return np.clip(p, LOG_CLAMP, 1.0)


# --------------------------------------------------------------------------
# generator


def generator_sample(g: GeneratorParams, rng: np.random.Generator) -> FeatureBits:
    return tuple(int(b) for b in rng.random(g.logits.shape[0]) < g.probs)


def generator_batch(g: GeneratorParams, rng: np.random.Generator, size: int) -> np.ndarray:
    return (rng.random((size, g.logits.shape[0])) < g.probs).astype(np.int8)


# --------------------------------------------------------------------------
# state preparation for the pipeline


@lru_cache(maxsize=1 << 16)
def _prepared(material: bytes | None, params: SchemeParams, bits: FeatureBits) -> np.ndarray:
    if material is None:
        return plain_encode(bits, params).amplitudes
    return encrypt(bits, TrapdoorKey(material), params).state.amplitudes


def prepare_batch(
    rows: Sequence[Sequence[int]], params: SchemeParams, k: TrapdoorKey | None
) -> np.ndarray:
    """Column-stacked states for a batch of bitstrings; ``k=None`` means plaintext."""
    material = None if k is None else k.material
    return np.stack(
        [_prepared(material, params, tuple(int(b) for b in row)) for row in rows], axis=1
    )


# --------------------------------------------------------------------------
# discriminators


def _variational_scores(angles: np.ndarray, amps: np.ndarray, n: int) -> np.ndarray:
    ring = qc._cz_ring_diagonal(n)
    if amps.ndim > 1:
        ring = ring[:, None]
    for layer in angles:
        for q in range(n):
            mat = qc.rz_matrix(layer[q, 1]) @ qc.ry_matrix(layer[q, 0])
            amps = qc._apply_1q(amps, n, q, mat)
        amps = amps * ring
    probs = np.abs(amps) ** 2
    half = probs.shape[0] // 2
    score = probs[:half].sum(axis=0)  # P(qubit 0 = 0) = (1 + <Z_0>) / 2
    return np.clip(score, 0.0, 1.0)


def _sampled(scores: np.ndarray, shots: int, rng: np.random.Generator | None) -> np.ndarray:
    if shots <= 0:
        return scores
    return rng.binomial(shots, scores) / shots


def discriminator_score(
    d: DiscriminatorParams,
    inputs,
    shots: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Score one encrypted state (variational) or a pair of them (fidelity)."""

    def as_state(s) -> QuantumState:
        return s.state if isinstance(s, EncryptedSample) else s

    if d.kind == FIDELITY_DISC:
        if not isinstance(inputs, (tuple, list)) or len(inputs) != 2:
            raise ValueError("FidelityDisc scores a pair of states")
        a, b = as_state(inputs[0]), as_state(inputs[1])
        return float(_sampled(np.array(fidelity(a, b)), shots, rng))
    if isinstance(inputs, (tuple, list)):
        raise ValueError("VariationalDisc scores a single state")
    s = as_state(inputs)
    if d.angles.shape[1] != s.n_qubits:
        raise ValueError("discriminator width does not match the state")
    return float(_sampled(_variational_scores(d.angles, s.amplitudes, s.n_qubits), shots, rng))


def _circuit_ops(angles: np.ndarray, n: int):
    """Gate list of the variational circuit: (qubit, matrix, angle index, kind) or a ring diagonal."""
    ring = qc._cz_ring_diagonal(n)
    ops = []
    for l, layer in enumerate(angles):
        for q in range(n):
            ops.append((q, qc.ry_matrix(layer[q, 0]), (l, q, 0), "RY"))
            ops.append((q, qc.rz_matrix(layer[q, 1]), (l, q, 1), "RZ"))
        ops.append((None, ring, None, "ring"))
    return ops


def _left(op, mat, n):
    q, gate = op[0], op[1]
    if q is None:
        return gate[:, None] * mat if mat.ndim > 1 else gate * mat
    return qc._apply_1q(mat, n, q, gate)


def score_jacobian(
    angles: np.ndarray,
    amps: np.ndarray,
    n: int,
    method: str = "parameter_shift",
    h: float = 1e-5,
) -> np.ndarray:
    """d score / d angle for every angle and batch column; shape ``angles.shape + (B,)``.

    Each angle drives one ``RY`` or ``RZ`` rotation, whose generator has
    eigenvalues +-1/2, so the two-term shift rule with shift pi/2 is exact.
    Shifted circuits are evaluated in the Heisenberg picture: the observable
    is pulled back through the gates after the shifted one, and the state is
    pushed forward through the gates before it.
    """
    shift, scale = (np.pi / 2, 0.5) if method == "parameter_shift" else (h, 0.5 / h)
    batched = amps if amps.ndim > 1 else amps[:, None]
    ops = _circuit_ops(angles, n)

    before = []
    psi = batched
    for op in ops:
        before.append(psi)
        psi = _left(op, psi, n)

    dim = 1 << n
    obs = np.diag(np.r_[np.ones(dim // 2), np.zeros(dim // 2)]).astype(np.complex128)
    after = [None] * len(ops)
    for i in range(len(ops) - 1, -1, -1):
        after[i] = obs
        q, gate = ops[i][0], ops[i][1]
        if q is None:
            obs = gate[:, None] * obs * gate[None, :]
        else:
            # obs <- G^dag obs G
            right = qc._apply_1q(obs.T, n, q, gate.T).T
            obs = qc._apply_1q(right, n, q, gate.conj().T)

    jac = np.empty(angles.shape + batched.shape[1:])
    for i, (q, _, idx, kind) in enumerate(ops):
        if idx is None:
            continue
        rot = qc.ry_matrix if kind == "RY" else qc.rz_matrix
        vals = []
        for sign in (1.0, -1.0):
            phi = qc._apply_1q(before[i], n, q, rot(angles[idx] + sign * shift))
            vals.append(np.einsum("yb,yb->b", phi.conj(), after[i] @ phi).real)
        jac[idx] = scale * (vals[0] - vals[1])
    return jac if amps.ndim > 1 else jac[..., 0]


def disc_loss_gradient(
    angles: np.ndarray,
    real: np.ndarray,
    fake: np.ndarray,
    n: int,
    method: str = "parameter_shift",
    h: float = 1e-5,
) -> np.ndarray:
    """Gradient of ``-mean log D(real) - mean log(1 - D(fake))`` w.r.t. the angles."""
    d_real = _variational_scores(angles, real, n)
    d_fake = _variational_scores(angles, fake, n)
    j_real = score_jacobian(angles, real, n, method, h)
    j_fake = score_jacobian(angles, fake, n, method, h)
    return -(j_real / _clamp(d_real)).mean(axis=-1) + (j_fake / _clamp(1 - d_fake)).mean(axis=-1)


# --------------------------------------------------------------------------
# training


def _check_finite(*values):
    if not all(np.isfinite(v) for v in values):
        raise TrainingDiverged("non-finite loss; reduce the learning rate")


def train_step(
    g: GeneratorParams,
    d: DiscriminatorParams,
    cfg: TrainConfig,
    k: TrapdoorKey,
    rng: np.random.Generator,
) -> tuple[GeneratorParams, DiscriminatorParams, dict[str, Any]]:
    n = cfg.n
    key = k if cfg.encrypted else None
    real_idx = rng.integers(0, len(cfg.dataset), size=cfg.batch_size)
    real_rows = [cfg.dataset[i] for i in real_idx]
    fake_rows = generator_batch(g, rng, cfg.batch_size)
    real = prepare_batch(real_rows, cfg.scheme, key)
    fake = prepare_batch(fake_rows, cfg.scheme, key)

    if d.kind == FIDELITY_DISC:
        return _fidelity_step(g, d, cfg, rng, real, fake, fake_rows)

    d_real = _sampled(_variational_scores(d.angles, real, n), cfg.shots, rng)
    d_fake = _sampled(_variational_scores(d.angles, fake, n), cfg.shots, rng)
    disc_loss = float(-np.log(_clamp(d_real)).mean() - np.log(_clamp(1 - d_fake)).mean())
    gen_loss = float(-np.log(_clamp(d_fake)).mean())
    _check_finite(disc_loss, gen_loss)

    grad_d = disc_loss_gradient(d.angles, real, fake, n, cfg.grad_method, cfg.fd_step)
    new_d = DiscriminatorParams(VARIATIONAL_DISC, d.angles - cfg.learning_rate * grad_d)

    # generator step against the updated discriminator
    d_fake_new = _sampled(_variational_scores(new_d.angles, fake, n), cfg.shots, rng)
    new_g = _reinforce_update(g, fake_rows, -np.log(_clamp(d_fake_new)), cfg.learning_rate)

    record = {
        "disc_loss": disc_loss,
        "gen_loss": gen_loss,
        "mean_real_score": float(np.mean(d_real)),
        "mean_fake_score": float(np.mean(d_fake)),
    }
    return new_g, new_d, record


def _fidelity_step(g, d, cfg, rng, real, fake, fake_rows):
    # real_i is paired with fake_i; real_i with real_{i+1} gives the reference scale
    fake_pair = np.clip(np.abs(np.einsum("yb,yb->b", real.conj(), fake)) ** 2, 0.0, 1.0)
    real_pair = np.clip(
        np.abs(np.einsum("yb,yb->b", real.conj(), np.roll(real, -1, axis=1))) ** 2, 0.0, 1.0
    )
    fake_pair = _sampled(fake_pair, cfg.shots, rng)
    real_pair = _sampled(real_pair, cfg.shots, rng)
    disc_loss = float(-np.log(_clamp(real_pair)).mean() - np.log(_clamp(1 - fake_pair)).mean())
    per_sample = -np.log(_clamp(fake_pair))
    gen_loss = float(per_sample.mean())
    _check_finite(disc_loss, gen_loss)
    new_g = _reinforce_update(g, fake_rows, per_sample, cfg.learning_rate)
    record = {
        "disc_loss": disc_loss,
        "gen_loss": gen_loss,
        "mean_real_score": float(real_pair.mean()),
        "mean_fake_score": float(fake_pair.mean()),
        "pair_scores": fake_pair.tolist(),
        "real_pair_scores": real_pair.tolist(),
    }
    return new_g, d, record


def _reinforce_update(g, rows, losses, lr) -> GeneratorParams:
    # score-function estimator with a batch-mean baseline
    rows = np.asarray(rows, dtype=float)
    adv = losses - losses.mean()
    grad = (adv[:, None] * (rows - g.probs[None, :])).mean(axis=0)
    return GeneratorParams(g.logits - lr * grad)


def init_params(cfg: TrainConfig, rng: np.random.Generator):
    g = GeneratorParams(np.zeros(cfg.n))
    if cfg.disc_kind == FIDELITY_DISC:
        return g, DiscriminatorParams(FIDELITY_DISC)
    return g, DiscriminatorParams.variational(cfg.n, cfg.depth, rng)


def train(cfg: TrainConfig, k: TrapdoorKey) -> TrainHistory:
    rng = np.random.default_rng(cfg.seed)
    g, d = init_params(cfg, rng)
    history = TrainHistory(key_fingerprint=k.fingerprint() if cfg.encrypted else None)
    key = k
    for step in range(cfg.steps):
        if cfg.rekey_per_batch:
            key = key_from_rng(rng)
        g, d, record = train_step(g, d, cfg, key, rng)
        history.records.append({"step": step, **record})
    history.generator, history.discriminator = g, d
    return history


def plaintext_twin(cfg: TrainConfig) -> TrainConfig:
    return replace(cfg, encrypted=False)
