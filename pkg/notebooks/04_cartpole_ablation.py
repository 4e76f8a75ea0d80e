"""
CartPole and the agent-count ablation
=====================================

Trains MFPO and the FedPG baseline on CartPole for a few seeds and
compares interactions needed to reach a return threshold. The runs are
short; raise ROUNDS and SEEDS for a fuller picture. Metrics go through
the same CSV path the command line tool uses.
"""

import tempfile
from pathlib import Path

from mfpo.harness import RunConfig, compare_report, execute, write_csv

ROUNDS, SEEDS, THRESHOLD = 30, (0, 1), 195.0
out = Path(tempfile.mkdtemp())

base = RunConfig(env="cartpole", K=10, D=10, T=10 * ROUNDS, alpha0=1.5e-3, stop_return=THRESHOLD)
paths = []
for label, cfg in [("mfpo_N5", base), ("fedpg_N5", base.replace(algorithm="fedpg")),
                   ("mfpo_N1", base.replace(N=1)), ("mfpo_N2", base.replace(N=2))]:
    for seed in SEEDS:
        res = execute(cfg.replace(seed=seed))
        path = out / f"{label}_seed{seed}.csv"
        write_csv(path, res.metrics)
        paths.append(path)
        last = res.metrics[-1]
        print(f"{label} seed {seed}: rounds {last.round}, return {last.eval_return_mean:.1f}")

print()
print(compare_report(paths, THRESHOLD).format())
