"""Membership-inference game against the encrypted (or plaintext) training pipeline.

One trial:

1. The challenger draws ``train_size + 1`` distinct pool entries. The last is
   the challenge point ``z``; a hidden bit ``b`` decides whether ``z``
   replaces one member of the training set.
2. A model is trained with a fresh trapdoor key.
3. The adversary submits plaintexts; the challenger encrypts them under the
   run's key and returns discriminator scores. The adversary never holds the
   key. It queries ``z`` ``query_budget`` times and a handful of pool points
   to calibrate a threshold, then guesses ``b``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Any, Sequence

import numpy as np

from .encodings import FeatureBits, feature_bits
from .genmodel import (
    VARIATIONAL_DISC,
    TrainConfig,
    TrainingDiverged,
    discriminator_score,
    train,
)
from .prf import TrapdoorKey, key_from_rng
from .prs import encrypt, plain_encode

ADVERSARIES = ("loss_threshold", "oracle", "coin_flip")


@dataclass
class MIAGameConfig:
    pool: Sequence[FeatureBits]
    train_template: TrainConfig
    train_size: int = 4
    trials: int = 200
    seed: int = 0
    encrypted: bool = True
    adversary: str = "loss_threshold"
    query_budget: int = 16
    query_shots: int = 0
    reference_queries: int = 16

    def __post_init__(self):
        n = self.train_template.n
        self.pool = [feature_bits(x, n) for x in self.pool]
        if self.train_size < 1:
            raise ValueError("train_size must be >= 1")
        if len(self.pool) < 2 * self.train_size:
            raise ValueError("pool must hold at least twice the training-set size")
        if self.trials < 20:
            raise ValueError("trials must be >= 20")
        if self.adversary not in ADVERSARIES:
            raise ValueError(f"adversary must be one of {ADVERSARIES}")
        if self.train_template.disc_kind != VARIATIONAL_DISC:
            raise ValueError("the game queries a single-state discriminator (VariationalDisc)")
        if self.query_budget < 1 or self.reference_queries < 1:
            raise ValueError("query budgets must be >= 1")

    @property
    def n(self) -> int:
        return self.train_template.n

    def to_json(self) -> dict[str, Any]:
        t = self.train_template
        return {
            "n": self.n,
            "scheme": t.scheme.scheme.value,
            "params": t.scheme.params_json(),
            "encrypted": self.encrypted,
            "pool": ["".join(map(str, x)) for x in self.pool],
            "train_size": self.train_size,
            "trials": self.trials,
            "seed": self.seed,
            "adversary": self.adversary,
            "query_budget": self.query_budget,
            "query_shots": self.query_shots,
            "reference_queries": self.reference_queries,
            "train": {
                "depth": t.depth,
                "batch_size": t.batch_size,
                "steps": t.steps,
                "learning_rate": t.learning_rate,
                "grad_method": t.grad_method,
                "shots": t.shots,
            },
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class GameTranscript:
    trial: int
    b: int
    challenge: FeatureBits
    observations: list[float]
    guess: int
    score: float
    key_fingerprint: str
    threshold: float | None = None
    error: str | None = None

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["challenge"] = "".join(map(str, self.challenge))
        return out


@dataclass(frozen=True)
class AttackResult:
    advantage: float
    auc: float
    trials: int
    ci_halfwidth: float
    accuracy: float

    @property
    def ci(self) -> tuple[float, float]:
        return (self.advantage - self.ci_halfwidth, self.advantage + self.ci_halfwidth)

    def ci_contains(self, value: float) -> bool:
        lo, hi = self.ci
        return lo <= value <= hi


def loss_threshold_attack(observations: Sequence[float], threshold: float = 0.5) -> tuple[int, float]:
    """Guess "member" when the mean score is strictly above the threshold."""
    obs = np.asarray(observations, dtype=float)
    if obs.size == 0:
        raise ValueError("need at least one observation")
    score = float(obs.mean())
    return int(score > threshold), score


def compute_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg), ties counted as 1/2."""
    y = np.asarray(labels, dtype=int)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape:
        raise ValueError("labels and scores must have equal length")
    pos, neg = s[y == 1], s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs both classes present")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def summarize(transcripts: Sequence[GameTranscript]) -> AttackResult:
    ok = [t for t in transcripts if t.error is None]
    if not ok:
        raise RuntimeError("every trial failed")
    labels = np.array([t.b for t in ok])
    guesses = np.array([t.guess for t in ok])
    acc = float(np.mean(labels == guesses))
    m = len(ok)
    try:
        auc = compute_auc(labels, [t.score for t in ok])
    except ValueError:
        auc = float("nan")
    half = 1.96 * 2 * math.sqrt(acc * (1 - acc) / m)
    return AttackResult(2 * (acc - 0.5), auc, m, half, acc)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def trial_key(seed: int, trial: int) -> TrapdoorKey:
    """The fresh key used by a trial; the first draw from the trial's stream."""
    return key_from_rng(trial_rng(seed, trial))


def run_trial(cfg: MIAGameConfig, trial: int) -> GameTranscript:
    rng = trial_rng(cfg.seed, trial)
    key = key_from_rng(rng)
    picks = rng.choice(len(cfg.pool), size=cfg.train_size + 1, replace=False)
    z = cfg.pool[picks[-1]]
    b = int(rng.integers(2))
    members = [cfg.pool[i] for i in picks[: cfg.train_size]]
    if b == 1:
        members[-1] = z

    tcfg = replace(
        cfg.train_template,
        dataset=members,
        seed=int(rng.integers(2**63)),
        encrypted=cfg.encrypted,
    )
    base = dict(trial=trial, b=b, challenge=z, key_fingerprint=key.fingerprint())
    try:
        history = train(tcfg, key)
    except TrainingDiverged as exc:
        return GameTranscript(observations=[], guess=0, score=float("nan"), error=str(exc), **base)
    disc = history.discriminator

    def query(x) -> float:
        # challenger-side encryption; only the score leaves the challenger
        state = (
            encrypt(x, key, tcfg.scheme).state if cfg.encrypted else plain_encode(x, tcfg.scheme)
        )
        return discriminator_score(disc, state, shots=cfg.query_shots, rng=rng)

    observations = [query(z) for _ in range(cfg.query_budget)]
    refs = rng.choice(len(cfg.pool), size=cfg.reference_queries, replace=True)
    threshold = float(np.median([query(cfg.pool[i]) for i in refs]))

    if cfg.adversary == "oracle":
        guess, score = b, float(b)
    elif cfg.adversary == "coin_flip":
        guess, score = int(rng.integers(2)), float(rng.random())
    else:
        guess, score = loss_threshold_attack(observations, threshold)
    return GameTranscript(
        observations=observations, guess=guess, score=score, threshold=threshold, **base
    )


def _run_trial_star(args):
    return run_trial(*args)


def run_game(cfg: MIAGameConfig, workers: int = 1) -> tuple[list[GameTranscript], AttackResult]:
    jobs = [(cfg, i) for i in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            transcripts = list(pool.map(_run_trial_star, jobs, chunksize=4))
    else:
        transcripts = [run_trial(*job) for job in jobs]
    return transcripts, summarize(transcripts)


def synthetic_pool(n: int, size: int, rng: np.random.Generator, bias: float = 0.8) -> list[FeatureBits]:
    """Distinct bitstrings from a skewed product distribution, as a stand-in for P_d."""
    probs = np.where(rng.random(n) < 0.5, bias, 1 - bias)
    seen: dict[FeatureBits, None] = {}
    limit = 2**n
    if size > limit:
        raise ValueError(f"cannot draw {size} distinct {n}-bit strings")
    while len(seen) < size:
        seen.setdefault(tuple(int(b) for b in rng.random(n) < probs), None)
    return list(seen)


def result_json(cfg: MIAGameConfig, transcripts, result: AttackResult, include_transcripts=False) -> dict:
    out = {
        "config_hash": cfg.config_hash(),
        "encrypted": cfg.encrypted,
        "adversary": cfg.adversary,
        "advantage": result.advantage,
        "auc": result.auc,
        "accuracy": result.accuracy,
        "trials": result.trials,
        "failed_trials": sum(t.error is not None for t in transcripts),
        "ci": list(result.ci),
        "ci_halfwidth": result.ci_halfwidth,
    }
    if include_transcripts:
        out["transcripts"] = [t.to_json() for t in transcripts]
    return out


def csv_summary_row(cfg: MIAGameConfig, result: AttackResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash", "scheme", "encrypted", "adversary", "n", "trials",
                "advantage", "ci_low", "ci_high", "auc"])
    lo, hi = result.ci
    w.writerow([cfg.config_hash(), cfg.train_template.scheme.scheme.value, cfg.encrypted,
                cfg.adversary, cfg.n, result.trials, f"{result.advantage:.6f}",
                f"{lo:.6f}", f"{hi:.6f}", f"{result.auc:.6f}"])
    return buf.getvalue()
