import pathlib
import time
from seedirl.harness.config import default_config
from seedirl.harness.runner import run_experiment, read_summary

out = pathlib.Path("/tmp/acc_probe")
for seed in (0, 1, 2):
    cfg = default_config("multiroom-7", "de-airl", master_seed=seed)
    t0 = time.time()
    run_dir = run_experiment(cfg, out)
    s = read_summary(run_dir)
    print(f"seed {seed}: expert {s['expert_proc_return']:.2f} "
          f"method {s['method_proc_return']:.2f} "
          f"frac {s['expert_fraction']:.3f} in {time.time()-t0:.0f}s",
          flush=True)
