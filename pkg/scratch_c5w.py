"""Scratch: fix the +579 row — bigger draws vs multiple rounds."""
import numpy as np

from mimicry.experiments import Environment, InProcessOracles
from mimicry.nnet import TrainingConfig

provider = InProcessOracles()
config = TrainingConfig.low_budget(seed=0, epochs=40)


def run_row(env, seed, draw, additional, rounds):
    # variant of active_vs_benchmark_run with a rounds knob
    from mimicry.active import SelectionStrategy, run_active_learning, run_random_benchmark
    from mimicry.experiments import _open_oracle, _pool_slices, build_environment
    from mimicry.extract import QueryBudget, collect_labels
    from mimicry.seeding import derive_seed

    target_corpus, test_samples, pool, vocab = build_environment(env)
    with _open_oracle(env, provider, target_corpus) as oracle:
        test_labeled = collect_labels(oracle, test_samples, QueryBudget(10**6)).labeled
        initial_samples, rest = _pool_slices(pool, seed, 100, len(pool) - 100)
        initial_labeled = collect_labels(oracle, initial_samples, QueryBudget(100)).labeled
        arm_seed = derive_seed(seed, "arm")
        per_round = additional // rounds
        strategy = SelectionStrategy("closest_k", k=per_round)
        _, reports = run_active_learning(
            oracle, initial_labeled, rest,
            rounds=rounds, draw_per_round=draw // rounds, strategy=strategy,
            config=config, budget=QueryBudget(per_round * rounds),
            seed=arm_seed, vocab=vocab, test_set=test_labeled,
        )
        _, bench = run_random_benchmark(
            oracle, initial_labeled, rest, per_round * rounds,
            config=config, budget=QueryBudget(per_round * rounds),
            seed=arm_seed, vocab=vocab, test_set=test_labeled,
        )
    return reports[-1].divergence.d_max, bench.divergence.d_max


for env_seed in (2025, 7, 99):
    env = Environment(
        corpus_n=20000, corpus_vocab=3000, overlap=0.5, env_seed=env_seed,
        target_train=5000, test_size=4000, feature_k=1500,
    )
    for draw, rounds in ((4000, 1), (2000, 2), (4000, 2)):
        rows = [run_row(env, s, draw, 579, rounds) for s in (1, 2, 3, 4, 5)]
        wins = sum(a <= b for a, b in rows)
        imp = np.median([b - a for a, b in rows])
        print(
            f"env={env_seed} +579 draw={draw} rounds={rounds}: wins={wins}/5 medimp={imp:+.4f} "
            f"act={[round(a, 3) for a, _ in rows]} ben={[round(b, 3) for _, b in rows]}"
        )
