import time
import numpy as np
from seedirl.envs import EnvMode, task_by_name, generate_level, reset_level
from seedirl.envs.oracles import oracle_rollout
from seedirl.demos import load_demos, replay_trajectory
from seedirl.airl import (AIRLConfig, airl_train, select_reward_checkpoint,
                          retrain_on_procenv, f_value)
from seedirl.policy import rollout_episodes

spec = task_by_name("multiroom-7")
demos = load_demos("/tmp/mr7_demos.txt")
env = demos.seed_env
exp_proc = float(open("/tmp/mr7_expproc.txt").read())
print(f"loaded demos, expert proc {exp_proc:.2f}", flush=True)

GAMMA = 0.97

def learned_return(model, traj):
    f = f_value(model, traj.obs[:-1], traj.obs[1:])
    return float(np.sum(f * GAMMA ** np.arange(len(f))))

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
    if fail.any():
        f_or = rows[fail, 2] > rows[fail, 3]
        print(f"  failures {fail.sum()}/{len(rows)}, reward-supports-oracle "
              f"{f_or.mean():.0%}", flush=True)

ARMS = [((16,), 3e-4), ((16,), 1e-3), ((64, 64), 1e-3)]
for disc_hidden, wd in ARMS:
    acfg = AIRLConfig(iterations=1500, episodes_per_update=16,
                      checkpoint_every=10, eval_episodes=20,
                      lr_reward=5e-4, disc_hidden=disc_hidden,
                      weight_decay=wd)
    t0 = time.time()
    res = airl_train(spec, EnvMode(spec, env), demos, acfg, seed=11)
    evals = [c.eval_score for c in res.store.snapshots]
    model = select_reward_checkpoint(res.store)
    print(f"\n== disc {disc_hidden} wd {wd}: airl 1500 in "
          f"{time.time()-t0:.0f}s, best snap {max(evals):.2f} @ "
          f"{res.store.snapshots[int(np.argmax(evals))].iteration}", flush=True)
    rcfg = AIRLConfig(iterations=1000, episodes_per_update=64)
    t0 = time.time()
    pol, (mean, std), _ = retrain_on_procenv(model, spec, rcfg, seed=13)
    print(f"retrain 1000x64: {mean:.2f}+-{std:.2f} frac {mean/exp_proc:.2f} "
          f"in {time.time()-t0:.0f}s", flush=True)
    diagnose(model, pol)
