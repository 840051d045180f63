import time
import numpy as np
from seedirl.envs import (EnvMode, make_seed_env, task_by_name, generate_level,
                          reset_level, encode_observation)
from seedirl.demos import (ExpertConfig, train_expert, sample_demonstrations,
                           persist_demos, load_demos)
from seedirl.airl import (AIRLConfig, airl_train, select_reward_checkpoint,
                          retrain_on_procenv, reward_head)
from seedirl.policy import PPOConfig, evaluate_policy

spec = task_by_name("multiroom-7")
import os
if not os.path.exists("/tmp/mr7_demos.txt"):
    cfg = ExpertConfig(iterations=500, episodes_per_update=64, eval_every=25,
                       ppo=PPOConfig(lr_policy=1e-3, lr_baseline=1e-3,
                                     entropy_coef=0.03, gamma=0.97,
                                     explore_rate=0.05))
    t0 = time.time()
    expert, ev = train_expert(spec, cfg, seed=7)
    exp_proc, _ = evaluate_policy(expert, EnvMode(spec), 200, np.random.default_rng(1))
    print(f"expert eval {ev:.2f}, proc {exp_proc:.2f}, {time.time()-t0:.0f}s", flush=True)
    env = make_seed_env(spec, 12, master_seed=99)
    demos = sample_demonstrations(expert, env, np.random.default_rng(5))
    persist_demos("/tmp/mr7_demos.txt", demos)
    with open("/tmp/mr7_expproc.txt", "w") as fh:
        fh.write(repr(exp_proc))
else:
    demos = load_demos("/tmp/mr7_demos.txt")
    env = demos.seed_env
    exp_proc = float(open("/tmp/mr7_expproc.txt").read())
    print(f"loaded demos, expert proc {exp_proc:.2f}", flush=True)
print("demo mean", demos.mean_return(), flush=True)

ARMS = [((16,), 5e-4), ((32, 32), 5e-4), ((16,), 1e-3)]
for disc_hidden, lr_reward in ARMS:
    acfg = AIRLConfig(iterations=1500, episodes_per_update=16,
                      checkpoint_every=10, eval_episodes=20,
                      lr_reward=lr_reward, disc_hidden=disc_hidden)
    t0 = time.time()
    res = airl_train(spec, EnvMode(spec, env), demos, acfg, seed=11)
    evals = [c.eval_score for c in res.store.snapshots]
    print(f"\n== disc {disc_hidden} lr_r {lr_reward}: airl 1500 in "
          f"{time.time()-t0:.0f}s, best snap {max(evals):.2f} @ "
          f"{res.store.snapshots[int(np.argmax(evals))].iteration}", flush=True)
    model = select_reward_checkpoint(res.store)

    starts, goals = [], []
    for s in range(5000, 5100):
        try:
            lvl = generate_level(spec, s)
        except Exception:
            continue
        st = reset_level(spec, lvl)
        starts.append(reward_head(model, encode_observation(spec, st)[None])[0])
        st.pos = lvl.goal
        goals.append(reward_head(model, encode_observation(spec, st)[None])[0])
    print(f"fresh r(s): start {np.mean(starts):.3f} at-goal {np.mean(goals):.3f} "
          f"ordered {np.mean(np.array(goals) > np.array(starts)):.0%}", flush=True)

    rcfg = AIRLConfig(iterations=1000, episodes_per_update=64,
                      checkpoint_every=10)
    t0 = time.time()
    pol, (mean, std), mrows = retrain_on_procenv(model, spec, rcfg, seed=13)
    curve = [round(m["env_eval"], 2) for m in mrows]
    print(f"retrain shaped 1000x64: {mean:.2f}+-{std:.2f} "
          f"frac {mean/exp_proc:.2f} in {time.time()-t0:.0f}s", flush=True)
    print("  curve (every 50):", curve[::50], flush=True)
