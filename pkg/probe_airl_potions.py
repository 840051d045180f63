import os
import time
import numpy as np
from seedirl.envs import EnvMode, make_seed_env, task_by_name
from seedirl.demos import (ExpertConfig, train_expert, sample_demonstrations,
                           persist_demos, load_demos)
from seedirl.airl import (AIRLConfig, airl_train, select_reward_checkpoint,
                          retrain_on_procenv)
from seedirl.policy import PPOConfig, evaluate_policy

spec = task_by_name("potions-8")
if not os.path.exists("/tmp/po8_demos.txt"):
    cfg = ExpertConfig(iterations=1000, episodes_per_update=64, eval_every=25,
                       ppo=PPOConfig(lr_policy=1e-3, lr_baseline=1e-3,
                                     entropy_coef=0.03, gamma=0.97,
                                     explore_rate=0.05))
    t0 = time.time()
    expert, ev = train_expert(spec, cfg, seed=7)
    exp_proc, _ = evaluate_policy(expert, EnvMode(spec), 200,
                                  np.random.default_rng(1))
    print(f"expert eval {ev:.2f}, proc {exp_proc:.2f}, {time.time()-t0:.0f}s",
          flush=True)
    env = make_seed_env(spec, 8, master_seed=99)
    demos = sample_demonstrations(expert, env, np.random.default_rng(5))
    persist_demos("/tmp/po8_demos.txt", demos)
    with open("/tmp/po8_expproc.txt", "w") as fh:
        fh.write(repr(exp_proc))
else:
    demos = load_demos("/tmp/po8_demos.txt")
    env = demos.seed_env
    exp_proc = float(open("/tmp/po8_expproc.txt").read())
    print(f"loaded demos, expert proc {exp_proc:.2f}", flush=True)
print("demo mean", demos.mean_return(), flush=True)

ARMS = [
    ("de-airl", True, False),
    ("no-shaping", False, False),
    ("naive", True, True),
]
for label, shaping, procedural in ARMS:
    acfg = AIRLConfig(iterations=1000, episodes_per_update=16,
                      checkpoint_every=10, eval_episodes=20,
                      lr_reward=5e-4, use_shaping=shaping)
    mode = EnvMode(spec) if procedural else EnvMode(spec, env)
    t0 = time.time()
    res = airl_train(spec, mode, demos, acfg, seed=11)
    evals = [c.eval_score for c in res.store.snapshots]
    losses = [m["disc_loss"] for m in res.metrics]
    print(f"\n== {label}: airl 1000 in {time.time()-t0:.0f}s, best snap "
          f"{max(evals):.2f} @ {res.store.snapshots[int(np.argmax(evals))].iteration}, "
          f"min disc loss {min(losses):.4f}", flush=True)
    model = select_reward_checkpoint(res.store)
    rcfg = AIRLConfig(iterations=500, episodes_per_update=64,
                      checkpoint_every=10)
    t0 = time.time()
    pol, (mean, std), mrows = retrain_on_procenv(model, spec, rcfg, seed=13)
    curve = [round(m["env_eval"], 2) for m in mrows]
    print(f"retrain 500x64: {mean:.2f}+-{std:.2f} frac {mean/exp_proc:.2f} "
          f"in {time.time()-t0:.0f}s", flush=True)
    print("  curve (every 25):", curve[::25], flush=True)
