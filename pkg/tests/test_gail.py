"""Imitation-baseline classifier algebra and training loop shape."""

import numpy as np
import pytest

from seedirl.airl import AIRLConfig
from seedirl.autodiff import backprop_gradients
from seedirl.demos import sample_demonstrations
from seedirl.envs import EnvMode, make_seed_env, task_by_name
from seedirl.errors import UsageError
from seedirl.gail import (gail_loss, gail_policy_reward, gail_train,
                          gail_transfer_eval, gail_update,
                          make_gail_discriminator)
from seedirl.gradcheck import finite_difference_check
from seedirl.optim import AdamState
from seedirl.policy import collect_rollouts, make_policy
from seedirl.rollouts import RolloutBuffer


def _setup(hidden=(8,), seed=0):
    spec = task_by_name("potions-8")
    disc = make_gail_discriminator(spec, hidden, seed=seed)
    policy = make_policy(spec, hidden=(4,), seed=seed + 1)
    rng = np.random.default_rng(seed + 2)
    a = collect_rollouts(policy, EnvMode(spec), 3, rng)
    b = collect_rollouts(policy, EnvMode(spec), 3, rng)
    return spec, disc, policy, a, b


def test_zero_logit_classifier_sits_at_chance():
    spec, disc, policy, a, b = _setup()
    for t in disc.params.values():
        t.data *= 0.0
    loss = gail_loss(disc, a, b).item()
    assert abs(loss - 2.0 * np.log(2.0)) < 1e-12
    np.testing.assert_allclose(disc.prob(a.flat_obs()), 0.5, atol=1e-15)


def test_loss_scalar_oracle():
    spec, disc, policy, a, b = _setup(seed=3)
    loss = gail_loss(disc, a, b).item()
    z_e = disc.logits(a.flat_obs())
    z_p = disc.logits(b.flat_obs())
    expected = np.mean(np.logaddexp(0.0, -z_e)) + np.mean(np.logaddexp(0.0, z_p))
    assert abs(loss - expected) < 1e-10


def test_loss_empty_side_rejected():
    spec, disc, policy, a, _ = _setup(seed=4)
    with pytest.raises(UsageError):
        gail_loss(disc, RolloutBuffer(), a)
    with pytest.raises(UsageError):
        gail_loss(disc, a, RolloutBuffer())


def test_policy_reward_is_softplus_of_logit():
    spec, disc, policy, a, _ = _setup(seed=5)
    z = disc.logits(a.flat_obs())
    expected = np.logaddexp(0.0, z)
    np.testing.assert_allclose(gail_policy_reward(disc, a.flat_obs()),
                               expected, atol=1e-12)
    # at chance the per-state reward is exactly -log(1/2)
    for t in disc.params.values():
        t.data *= 0.0
    np.testing.assert_allclose(gail_policy_reward(disc, a.flat_obs()),
                               np.log(2.0), atol=1e-15)


def test_policy_reward_extreme_logits_stay_finite():
    spec, disc, policy, a, _ = _setup(hidden=(), seed=6)
    disc.params["w0"].data *= 0.0
    for big in (800.0, -800.0):
        disc.params["b0"].data[:] = big
        r = gail_policy_reward(disc, a.flat_obs())
        assert np.all(np.isfinite(r))
        if big > 0:
            np.testing.assert_allclose(r, big, atol=1e-9)
        else:
            np.testing.assert_allclose(r, 0.0, atol=1e-9)


def test_update_separates_labeled_batches():
    # give the two sides systematically different observations and check
    # the classifier pulls expert probability up and policy probability down
    spec, disc, policy, a, b = _setup(seed=7)
    e_obs = a.flat_obs().copy()
    p_obs = b.flat_obs().copy()
    e_obs[:, 0] = 1.0
    p_obs[:, 0] = 0.0
    ebuf, pbuf = a, b
    for t, o in zip(ebuf.trajectories, np.split(e_obs, len(ebuf))):
        t.obs[:-1] = o
    for t, o in zip(pbuf.trajectories, np.split(p_obs, len(pbuf))):
        t.obs[:-1] = o
    opt = AdamState(lr=1e-2)
    first = gail_update(disc, opt, ebuf, pbuf)
    for _ in range(60):
        last = gail_update(disc, opt, ebuf, pbuf)
    assert last < first
    assert disc.prob(e_obs).mean() > 0.8
    assert disc.prob(p_obs).mean() < 0.2


def test_gradcheck_classifier():
    spec, disc, policy, a, b = _setup(seed=8)
    report = finite_difference_check(
        disc.params, lambda _: gail_loss(disc, a, b),
        max_coords_per_param=4, rng=np.random.default_rng(9))
    assert report.max_rel_err < 1e-4


def test_gradients_flow_to_all_classifier_params():
    spec, disc, policy, a, b = _setup(seed=10)
    grads = backprop_gradients(disc.params, gail_loss(disc, a, b))
    assert set(grads) == set(disc.params)
    assert any(np.any(g != 0.0) for g in grads.values())


def test_train_loop_metrics_and_transfer():
    spec = task_by_name("potions-8")
    env = make_seed_env(spec, 3, master_seed=5)
    expert = make_policy(spec, hidden=(8,), seed=1)
    demos = sample_demonstrations(expert, env, np.random.default_rng(2))
    cfg = AIRLConfig(iterations=3, episodes_per_update=4, checkpoint_every=2,
                     eval_episodes=2, hidden=(8,))
    res = gail_train(spec, EnvMode(spec, env), demos, cfg, seed=3)
    assert len(res.metrics) == 3
    assert set(res.metrics[0]) == {"iteration", "disc_loss",
                                   "mean_learned_reward", "env_eval"}
    mean, std = gail_transfer_eval(res, spec, episodes=5, seed=4)
    assert np.isfinite(mean) and std >= 0.0


def test_train_determinism():
    spec = task_by_name("potions-8")
    env = make_seed_env(spec, 3, master_seed=6)
    expert = make_policy(spec, hidden=(8,), seed=1)
    demos = sample_demonstrations(expert, env, np.random.default_rng(2))
    cfg = AIRLConfig(iterations=3, episodes_per_update=4, checkpoint_every=2,
                     eval_episodes=2, hidden=(8,))
    r1 = gail_train(spec, EnvMode(spec, env), demos, cfg, seed=9)
    r2 = gail_train(spec, EnvMode(spec, env), demos, cfg, seed=9)
    assert r1.metrics == r2.metrics