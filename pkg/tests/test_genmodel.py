from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prsguard import genmodel as gm
from prsguard import prf
from prsguard import quantumcore as qc
from prsguard.prs import SchemeParams, encrypt

from conftest import random_state


# --- independent dense-matrix oracle for the variational discriminator ------

def _dense_circuit(angles, n):
    dim = 1 << n
    u = np.eye(dim, dtype=complex)
    cz = np.ones(dim)
    pairs = {tuple(sorted((q, (q + 1) % n))) for q in range(n) if n > 1}
    for y in range(dim):
        bits = [(y >> (n - 1 - q)) & 1 for q in range(n)]
        for a, b in pairs:
            if bits[a] and bits[b]:
                cz[y] *= -1
    for layer in angles:
        ops = []
        for q in range(n):
            ry = np.cos(layer[q, 0] / 2) * np.eye(2) + np.sin(layer[q, 0] / 2) * np.array([[0, -1], [1, 0]])
            rz = np.diag([np.exp(-0.5j * layer[q, 1]), np.exp(0.5j * layer[q, 1])])
            ops.append(rz @ ry)
        u = np.diag(cz) @ reduce(np.kron, ops) @ u
    return u


def _oracle_scores(angles, states, n):
    out = _dense_circuit(angles, n) @ states
    return (np.abs(out[: (1 << n) // 2]) ** 2).sum(axis=0)


def _oracle_loss(angles, real, fake, n):
    return -np.log(_oracle_scores(angles, real, n)).mean() - np.log(1 - _oracle_scores(angles, fake, n)).mean()


def _oracle_fd_gradient(angles, real, fake, n, h=1e-5):
    grad = np.zeros_like(angles)
    for idx in np.ndindex(angles.shape):
        up, dn = angles.copy(), angles.copy()
        up[idx] += h
        dn[idx] -= h
        grad[idx] = (_oracle_loss(up, real, fake, n) - _oracle_loss(dn, real, fake, n)) / (2 * h)
    return grad


def _random_batch(n, b, rng):
    v = rng.standard_normal((1 << n, b)) + 1j * rng.standard_normal((1 << n, b))
    return v / np.linalg.norm(v, axis=0)


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b))


# ----------------------------------------------------------------------------


def test_generator_saturation_and_frequency():
    rng = np.random.default_rng(0)
    g = gm.GeneratorParams(np.full(5, -40.0))
    assert all(gm.generator_sample(g, rng) == (0,) * 5 for _ in range(1000))
    g0 = gm.GeneratorParams(np.zeros(4))
    draws = gm.generator_batch(g0, np.random.default_rng(1), 10_000)
    band = 3 * np.sqrt(0.25 / 10_000)
    assert np.all(np.abs(draws.mean(axis=0) - 0.5) <= band)
    assert gm.generator_sample(g0, np.random.default_rng(5)) == gm.generator_sample(g0, np.random.default_rng(5))
    with pytest.raises(ValueError):
        gm.GeneratorParams([np.inf, 0.0])


def test_discriminator_param_shapes():
    d = gm.DiscriminatorParams.variational(4, 3, np.random.default_rng(0))
    assert d.angles.size == 2 * 4 * 3
    with pytest.raises(ValueError):
        gm.DiscriminatorParams(gm.FIDELITY_DISC, np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        gm.DiscriminatorParams(gm.VARIATIONAL_DISC, np.zeros((1, 2, 3)))


def test_fidelity_disc_examples():
    k = prf.gen_trapdoor(0)
    d = gm.DiscriminatorParams(gm.FIDELITY_DISC)
    a = encrypt("0110", k, SchemeParams.phase())
    b = encrypt("0111", k, SchemeParams.phase())
    assert gm.discriminator_score(d, (a, a)) == pytest.approx(1, abs=1e-12)
    assert gm.discriminator_score(d, (a, b)) <= 1e-10
    with pytest.raises(ValueError):
        gm.discriminator_score(d, a)


def test_variational_disc_zero_angles():
    rng = np.random.default_rng(2)
    d = gm.DiscriminatorParams.variational(4, 2)
    for _ in range(5):
        v = rng.standard_normal(16)
        s = qc.QuantumState(4, v / np.linalg.norm(v))
        p = np.abs(s.amplitudes) ** 2
        expected = (1 + p[:8].sum() - p[8:].sum()) / 2
        assert gm.discriminator_score(d, s) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        gm.discriminator_score(d, (s, s))
    with pytest.raises(ValueError):
        gm.discriminator_score(d, qc.zero_state(3))


@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_variational_scores_match_dense_oracle(n, depth, seed):
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * np.pi, (depth, n, 2))
    states = _random_batch(n, 3, rng)
    got = gm._variational_scores(angles, states, n)
    np.testing.assert_allclose(got, _oracle_scores(angles, states, n), atol=1e-12)
    assert np.all((got >= 0) & (got <= 1))


@pytest.mark.parametrize("seed", range(5))
def test_parameter_shift_matches_oracle_fd(seed):
    rng = np.random.default_rng(seed)
    n, depth = 3, 2
    angles = rng.uniform(0, 2 * np.pi, (depth, n, 2))
    real, fake = _random_batch(n, 4, rng), _random_batch(n, 4, rng)
    ps = gm.disc_loss_gradient(angles, real, fake, n)
    assert rel_err(ps, _oracle_fd_gradient(angles, real, fake, n)) <= 1e-4
    fd = gm.disc_loss_gradient(angles, real, fake, n, "finite_difference", 1e-5)
    assert rel_err(ps, fd) <= 1e-4


def test_score_jacobian_single_state_shape():
    rng = np.random.default_rng(9)
    angles = rng.uniform(0, 6, (2, 3, 2))
    s = random_state(3, rng).amplitudes
    jac = gm.score_jacobian(angles, s, 3)
    assert jac.shape == angles.shape
    batched = gm.score_jacobian(angles, s[:, None], 3)
    np.testing.assert_allclose(jac, batched[..., 0])


def _cfg(**kw):
    base = dict(n=4, dataset=["1011", "0011"], steps=10, batch_size=4, seed=3)
    base.update(kw)
    return gm.TrainConfig(**base)


def test_zero_learning_rate_keeps_parameters():
    k = prf.gen_trapdoor(1)
    cfg = _cfg(learning_rate=0.0, depth=2)
    rng = np.random.default_rng(cfg.seed)
    g0, d0 = gm.init_params(cfg, rng)
    hist = gm.train(cfg, k)
    assert np.array_equal(hist.generator.logits, g0.logits)
    assert np.array_equal(hist.discriminator.angles, d0.angles)
    assert np.all(np.isfinite(hist.column("disc_loss")))


def test_training_is_deterministic():
    k = prf.gen_trapdoor(2)
    a, b = gm.train(_cfg(), k), gm.train(_cfg(), k)
    assert list(a.iter_jsonl()) == list(b.iter_jsonl())
    assert np.array_equal(a.discriminator.angles, b.discriminator.angles)


def test_zero_steps_gives_empty_history():
    hist = gm.train(_cfg(steps=0), prf.gen_trapdoor(0))
    assert len(hist) == 0 and list(hist.iter_jsonl()) == []


def test_history_scores_are_bounded():
    hist = gm.train(_cfg(steps=20, shots=50), prf.gen_trapdoor(4))
    for col in ("mean_real_score", "mean_fake_score"):
        v = hist.column(col)
        assert np.all((v >= 0) & (v <= 1))
    assert set(hist.records[0]) == {"step", "disc_loss", "gen_loss", "mean_real_score", "mean_fake_score"}


def test_diverged_step_raises():
    with pytest.raises(gm.TrainingDiverged):
        gm._check_finite(1.0, float("nan"))


def test_config_validation():
    with pytest.raises(ValueError):
        _cfg(batch_size=0)
    with pytest.raises(ValueError):
        _cfg(grad_method="finite_difference", fd_step=0.0)
    with pytest.raises(ValueError):
        _cfg(dataset=[])
    with pytest.raises(ValueError):
        _cfg(grad_method="adjoint")


@pytest.mark.parametrize(
    "params",
    [SchemeParams.phase(), SchemeParams.param_phase([0.7, 1.9, 3.3, 5.1]), SchemeParams.basis(8)],
    ids=lambda p: p.scheme.value,
)
def test_fidelity_pipeline_invariance(params):
    cfg = _cfg(disc_kind=gm.FIDELITY_DISC, scheme=params, steps=30)
    k = prf.gen_trapdoor(6)
    enc_h = gm.train(cfg, k)
    plain_h = gm.train(gm.plaintext_twin(cfg), k)
    for col in ("pair_scores", "real_pair_scores"):
        diff = np.abs(enc_h.column(col) - plain_h.column(col))
        assert diff.max() <= 1e-9
    assert enc_h.key_fingerprint == k.fingerprint() and plain_h.key_fingerprint is None


def test_rekey_per_batch_keeps_fidelity_invariance():
    cfg = _cfg(disc_kind=gm.FIDELITY_DISC, scheme=SchemeParams.basis(3), rekey_per_batch=True, steps=15)
    k = prf.gen_trapdoor(7)
    a = gm.train(cfg, k).column("pair_scores")
    b = gm.train(gm.plaintext_twin(cfg), k).column("pair_scores")
    assert np.abs(a - b).max() <= 1e-9


@pytest.mark.slow
def test_smoke_single_point_dataset():
    # regression fixture, not ground truth: the discriminator separates the
    # single real point from generator samples late in training
    cfg = gm.TrainConfig(n=4, dataset=["1011"], steps=500, depth=1, seed=0)
    hist = gm.train(cfg, prf.gen_trapdoor(0))
    gap = hist.column("mean_real_score")[-100:] - hist.column("mean_fake_score")[-100:]
    assert gap.mean() > 0
