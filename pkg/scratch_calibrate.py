"""Scratch: calibrate acceptance-criteria environments."""
import sys
import time

import numpy as np

from mimicry.experiments import Environment, InProcessOracles, extraction_run
from mimicry.nnet import TrainingConfig

which = sys.argv[1] if len(sys.argv) > 1 else "c4"
provider = InProcessOracles()

if which == "c5":
    from mimicry.experiments import active_vs_benchmark_run

    for overlap, vocab in ((0.5, 3000), (0.5, 5000), (0.7, 3000)):
        for profile in ("low", "high"):
            config = (
                TrainingConfig.low_budget(seed=0)
                if profile == "low"
                else TrainingConfig.high_budget(seed=0)
            )
            env = Environment(
                corpus_n=20000,
                corpus_vocab=vocab,
                overlap=overlap,
                env_seed=2025,
                target_train=5000,
                test_size=4000,
                feature_k=1500,
            )
            t0 = time.perf_counter()
            for draw, additional in ((500, 224), (1000, 579)):
                rows = [
                    active_vs_benchmark_run(
                        env, provider, s, initial=100, draw=draw, additional=additional, config=config
                    )
                    for s in (1, 2, 3, 4, 5)
                ]
                wins = sum(r["d_max_active"] <= r["d_max_benchmark"] for r in rows)
                improvement = np.median(
                    [r["d_max_benchmark"] - r["d_max_active"] for r in rows]
                )
                print(
                    f"ov={overlap} prof={profile} +{additional}: wins={wins}/5 medimp={improvement:+.4f} "
                    f"act={[round(r['d_max_active'], 3) for r in rows]} "
                    f"ben={[round(r['d_max_benchmark'], 3) for r in rows]}"
                )
            print(f"  elapsed {time.perf_counter() - t0:.1f}s")

if which == "c6":
    from mimicry.experiments import causative_run

    config = TrainingConfig.low_budget(seed=0, epochs=40)
    for env_seed in (2026, 31, 77):
        for train, vocab, ov in ((500, 1000, 0.8), (500, 1500, 0.8), (800, 1000, 0.7)):
            env = Environment(
                corpus_n=6000,
                corpus_vocab=vocab,
                overlap=ov,
                env_seed=env_seed,
                target_train=train,
                test_size=100,
                feature_k=800,
            )
            t0 = time.perf_counter()
            ranked, random_ = [], []
            for s in (1, 2, 3, 4, 5):
                kw = dict(p=10.0, pool_size=1000, eval_size=1000, substitute_budget=500, config=config)
                ranked.append(causative_run(env, provider, s, plan_kind="ranked", **kw))
                random_.append(causative_run(env, provider, s, plan_kind="random", **kw))
            wins = sum(a["d_avg"] >= b["d_avg"] for a, b in zip(ranked, random_))
            pos = sum(a["d_avg"] > 0 for a in ranked)
            print(
                f"env={env_seed} train={train} V={vocab} ov={ov}: wins={wins}/5 pos={pos}/5 "
                f"ranked={[round(a['d_avg'], 4) for a in ranked]} "
                f"random={[round(b['d_avg'], 4) for b in random_]} ({time.perf_counter()-t0:.0f}s)"
            )

if which == "c7":
    from mimicry.experiments import evasion_run

    config = TrainingConfig.low_budget(seed=0, epochs=40)
    for env_seed in (2027, 41, 88):
        for train, vocab, ov in ((1000, 1000, 0.7), (1000, 1500, 0.6), (2000, 1000, 0.7)):
            env = Environment(
                corpus_n=8000,
                corpus_vocab=vocab,
                overlap=ov,
                env_seed=env_seed,
                target_train=train,
                test_size=100,
                feature_k=800,
            )
            t0 = time.perf_counter()
            rows = [
                evasion_run(
                    env, provider, s, n=100, candidate_size=2000, substitute_budget=500, config=config
                )
                for s in (1, 2, 3, 4, 5)
            ]
            wins = sum(r["selected_error_rate"] >= r["baseline_error_rate"] for r in rows)
            print(
                f"env={env_seed} train={train} V={vocab} ov={ov}: wins={wins}/5 "
                f"sel={[round(r['selected_error_rate'], 2) for r in rows]} "
                f"base={[round(r['baseline_error_rate'], 2) for r in rows]} ({time.perf_counter()-t0:.0f}s)"
            )

if which == "c4":
    env = Environment(
        corpus_n=10000,
        corpus_vocab=800,
        overlap=0.3,
        env_seed=2024,
        target_train=5000,
        test_size=1000,
        feature_k=600,
    )
    config = TrainingConfig.high_budget(seed=0)
    t0 = time.perf_counter()
    for budget in (100, 500, 1000):
        dmaxes = []
        for seed in (1, 2, 3, 4, 5):
            out = extraction_run(env, provider, seed, budget, config)
            dmaxes.append(out["d_max_test"])
            assert out["budget_conserved"]
        print(f"budget={budget}: d_max={[round(d, 3) for d in dmaxes]} median={np.median(dmaxes):.3f}")
    print(f"elapsed {time.perf_counter() - t0:.1f}s")
