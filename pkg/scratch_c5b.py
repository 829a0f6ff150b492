"""Scratch: why does the active arm sometimes blow up at +224?

Variants: threshold from accumulated (biased) data vs from the unbiased
initial labels only; 1 round vs 2 rounds.
"""
import numpy as np

from mimicry.corpus import SampleSet
from mimicry.experiments import Environment, InProcessOracles, build_environment, derive_seed
from mimicry.extract import QueryBudget, collect_labels, divergence, optimize_threshold
from mimicry.extract import SubstituteClassifier
from mimicry.corpus import featurize_all
from mimicry import nnet
from mimicry.nnet import TrainingConfig
from mimicry.oracle import TargetOracle


def fit(training, config, vocab, threshold_pool=None):
    samples = list(training)
    feats = featurize_all([s.text for s in samples], vocab)
    y = np.asarray([s.label for s in samples])
    params, norm = nnet.train(list(zip(feats, y)), config)
    cal = samples if threshold_pool is None else threshold_pool
    cal_feats = featurize_all([s.text for s in cal], vocab)
    cal_y = np.asarray([s.label for s in cal])
    scores = nnet.predict_scores(params, norm, cal_feats)
    thr, _ = optimize_threshold(scores, cal_y)
    return SubstituteClassifier(params, norm, thr, vocab)


def one(env, seed, additional, draw, config, mode, rounds=1):
    target_corpus, test_samples, pool, vocab = build_environment(env)
    oracle = TargetOracle(target_corpus, calls_per_day=10**9)
    test_labeled = collect_labels(oracle, test_samples, QueryBudget(10**6)).labeled
    rng = np.random.default_rng(derive_seed(seed, "pool-order"))
    order = rng.permutation(len(pool))
    initial = collect_labels(
        oracle, [pool[i] for i in order[:100]], QueryBudget(10**6)
    ).labeled
    rest = [pool[i] for i in order[100:]]

    arm_seed = derive_seed(seed, "arm")
    from dataclasses import replace

    results = {}
    for arm in ("active", "bench"):
        training = list(initial)
        cal = list(initial) if mode == "cal_initial" else None
        sub = fit(training, replace(config, seed=derive_seed(arm_seed, "r0")), vocab, cal)
        rng2 = np.random.default_rng(derive_seed(arm_seed, "draw"))
        cursor = 0
        per_round = additional // rounds
        for r in range(rounds):
            chunk = rest[cursor : cursor + draw // rounds]
            cursor += draw // rounds
            if arm == "active":
                scores = sub.scores(chunk)
                dist = np.abs(scores - sub.threshold)
                sel = np.argsort(dist, kind="stable")[:per_round]
                chosen = [chunk[i] for i in sorted(sel)]
            else:
                sel = rng2.choice(len(chunk), size=per_round, replace=False)
                chosen = [chunk[i] for i in sorted(sel)]
            newly = collect_labels(oracle, chosen, QueryBudget(10**6)).labeled
            training.extend(newly)
            cal2 = list(initial) if mode == "cal_initial" else None
            sub = fit(training, replace(config, seed=derive_seed(arm_seed, f"r{r+1}")), vocab, cal2)
        preds = sub.predict_many(list(test_labeled))
        results[arm] = divergence(test_labeled.labels(), preds).d_max
    return results


for vocab, ov, fk in ((3000, 0.5, 1500), (800, 0.3, 600)):
    for profile in ("low40", "high40"):
        config = (
            TrainingConfig.low_budget(seed=0, epochs=40)
            if profile == "low40"
            else TrainingConfig.high_budget(seed=0, epochs=40, learning_rate=0.05)
        )
        for draw in (500, 2000):
            for env_seed in (2025, 7, 99):
                env = Environment(
                    corpus_n=20000,
                    corpus_vocab=vocab,
                    overlap=ov,
                    env_seed=env_seed,
                    target_train=5000,
                    test_size=4000,
                    feature_k=fk,
                )
                rows = [one(env, s, 224, draw, config, "insample", 1) for s in (1, 2, 3, 4, 5)]
                wins = sum(r["active"] <= r["bench"] for r in rows)
                imp = np.median([r["bench"] - r["active"] for r in rows])
                print(
                    f"V={vocab} ov={ov} prof={profile} draw={draw} env={env_seed}: wins={wins}/5 "
                    f"medimp={imp:+.4f} act={[round(r['active'], 3) for r in rows]} "
                    f"ben={[round(r['bench'], 3) for r in rows]}"
                )
