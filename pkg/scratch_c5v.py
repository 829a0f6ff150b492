"""Scratch: verify the chosen criterion-5 configuration across env seeds and rows."""
import time

import numpy as np

from mimicry.experiments import Environment, InProcessOracles, active_vs_benchmark_run
from mimicry.nnet import TrainingConfig

provider = InProcessOracles()
config = TrainingConfig.low_budget(seed=0, epochs=40)

t0 = time.perf_counter()
for env_seed in (2025, 7, 99, 123, 555):
    env = Environment(
        corpus_n=20000,
        corpus_vocab=3000,
        overlap=0.5,
        env_seed=env_seed,
        target_train=5000,
        test_size=4000,
        feature_k=1500,
    )
    for draw, additional in ((2000, 224), (2000, 579)):
        rows = [
            active_vs_benchmark_run(
                env, provider, s, initial=100, draw=draw, additional=additional, config=config
            )
            for s in (1, 2, 3, 4, 5)
        ]
        wins = sum(r["d_max_active"] <= r["d_max_benchmark"] for r in rows)
        imp = np.median([r["d_max_benchmark"] - r["d_max_active"] for r in rows])
        print(
            f"env={env_seed} +{additional}: wins={wins}/5 medimp={imp:+.4f} "
            f"act={[round(r['d_max_active'], 3) for r in rows]} "
            f"ben={[round(r['d_max_benchmark'], 3) for r in rows]}"
        )
print(f"elapsed {time.perf_counter() - t0:.1f}s")
