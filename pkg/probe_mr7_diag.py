import time
import numpy as np
from seedirl.envs import (EnvMode, task_by_name, generate_level, reset_level)
from seedirl.envs.oracles import oracle_rollout
from seedirl.demos import load_demos, replay_trajectory
from seedirl.airl import (AIRLConfig, airl_train, select_reward_checkpoint,
                          retrain_on_procenv, f_value)
from seedirl.policy import PPOConfig, rollout_episodes, evaluate_policy
from seedirl.rollouts import Trajectory

spec = task_by_name("multiroom-7")
demos = load_demos("/tmp/mr7_demos.txt")
env = demos.seed_env
exp_proc = float(open("/tmp/mr7_expproc.txt").read())
print(f"loaded demos, expert proc {exp_proc:.2f}", flush=True)

GAMMA = 0.97

def disc_return(vals):
    return float(np.sum(vals * GAMMA ** np.arange(len(vals))))

def learned_return(model, traj):
    f = f_value(model, traj.obs[:-1], traj.obs[1:])
    return disc_return(f)

def diagnose(model, policy, n_levels=100, seed0=5000):
    rows = []
    rng = np.random.default_rng(0)
    for s in range(seed0, seed0 + n_levels):
        try:
            lvl = generate_level(spec, s)
        except Exception:
            continue
        o_actions, o_ret = oracle_rollout(spec, lvl)
        o_traj = replay_trajectory(spec, lvl.seed, np.asarray(o_actions),
                                   np.zeros(len(o_actions)))
        buf = rollout_episodes(policy, [reset_level(spec, lvl)], rng,
                               reward_source="none")
        p_traj = buf.trajectories[0]
        rows.append((o_ret, p_traj.gt_return,
                     learned_return(model, o_traj),
                     learned_return(model, p_traj)))
    rows = np.array(rows)
    fail = rows[:, 1] < 0.5 * rows[:, 0]
    print(f"  levels {len(rows)}, failures {fail.sum()}", flush=True)
    if fail.any():
        f_or = rows[fail, 2] > rows[fail, 3]
        print(f"  on failures: oracle learned-return > policy's on "
              f"{f_or.mean():.0%} (reward-supports-oracle share)", flush=True)
        print(f"  mean learned-return oracle {rows[fail, 2].mean():.2f} vs "
              f"policy {rows[fail, 3].mean():.2f}", flush=True)
    ok = ~fail
    if ok.any():
        print(f"  on successes: oracle {rows[ok, 2].mean():.2f} vs policy "
              f"{rows[ok, 3].mean():.2f}", flush=True)

BASE = dict(episodes_per_update=16, checkpoint_every=10, eval_episodes=20,
            lr_reward=5e-4, disc_hidden=(16,))

# arm 1: baseline rerun for the diagnostic (same seed as probe E arm 1)
acfg = AIRLConfig(iterations=1500, **BASE)
t0 = time.time()
res = airl_train(spec, EnvMode(spec, env), demos, acfg, seed=11)
model = select_reward_checkpoint(res.store)
print(f"\n== arm1 rerun disc(16,) lr 5e-4: {time.time()-t0:.0f}s", flush=True)

rcfg = AIRLConfig(iterations=800, episodes_per_update=128)
t0 = time.time()
pol, (mean, std), _ = retrain_on_procenv(model, spec, rcfg, seed=13)
print(f"retrain 800x128: {mean:.2f}+-{std:.2f} frac {mean/exp_proc:.2f} "
      f"in {time.time()-t0:.0f}s", flush=True)
print("diagnostic on 800x128 policy:", flush=True)
diagnose(model, pol)

# arm 2: K=5 generator steps per reward step
ppo5 = PPOConfig(lr_policy=1e-3, lr_baseline=1e-3, entropy_coef=0.03,
                 gamma=0.97, explore_rate=0.05, policy_steps_per_reward_step=5)
acfg = AIRLConfig(iterations=1200, ppo=ppo5, **BASE)
t0 = time.time()
res = airl_train(spec, EnvMode(spec, env), demos, acfg, seed=11)
evals = [c.eval_score for c in res.store.snapshots]
model5 = select_reward_checkpoint(res.store)
print(f"\n== arm2 K=5: airl 1200 in {time.time()-t0:.0f}s, best snap "
      f"{max(evals):.2f}", flush=True)
rcfg = AIRLConfig(iterations=1000, episodes_per_update=64)
t0 = time.time()
pol5, (mean, std), _ = retrain_on_procenv(model5, spec, rcfg, seed=13)
print(f"retrain 1000x64: {mean:.2f}+-{std:.2f} frac {mean/exp_proc:.2f} "
      f"in {time.time()-t0:.0f}s", flush=True)
diagnose(model5, pol5)
