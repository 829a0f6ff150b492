"""Scratch: variance of refit quality across training seeds, by lr/epochs."""
import numpy as np

from mimicry.active import refit
from mimicry.corpus import SampleSet
from mimicry.experiments import Environment, InProcessOracles, build_environment, derive_seed
from mimicry.extract import QueryBudget, collect_labels, divergence
from mimicry.nnet import TrainingConfig
from mimicry.oracle import TargetOracle
from dataclasses import replace

env = Environment(
    corpus_n=20000, corpus_vocab=3000, overlap=0.5, env_seed=2025,
    target_train=5000, test_size=4000, feature_k=1500,
)
target_corpus, test_samples, pool, vocab = build_environment(env)
oracle = TargetOracle(target_corpus, calls_per_day=10**9)
test_labeled = collect_labels(oracle, test_samples, QueryBudget(10**6)).labeled
labeled = collect_labels(oracle, pool[:324], QueryBudget(10**6)).labeled

for profile, base in (("low", TrainingConfig.low_budget), ("high", TrainingConfig.high_budget)):
    for lr, epochs in ((0.1, None), (0.1, 40), (0.05, 40), (0.02, 60)):
        kw = {"learning_rate": lr}
        if epochs is not None:
            kw["epochs"] = epochs
        dmaxes = []
        for seed in range(10):
            cfg = base(seed=seed, **kw)
            sub = refit(labeled, cfg, vocab)
            rep = divergence(test_labeled.labels(), sub.predict_many(list(test_labeled)))
            dmaxes.append(rep.d_max)
        print(
            f"prof={profile} lr={lr} epochs={epochs or 'default'}: "
            f"mean={np.mean(dmaxes):.3f} sd={np.std(dmaxes):.3f} max={np.max(dmaxes):.3f}"
        )
