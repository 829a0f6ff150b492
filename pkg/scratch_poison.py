"""Scratch: how sensitive is the NB target to label-flipping feedback?"""
import numpy as np

from mimicry.corpus import SampleSet, generate_corpus
from mimicry.oracle import TargetOracle


def margin(model, text):
    s1, s2 = model.log_prior[1], model.log_prior[2]
    from mimicry.corpus import tokenize

    for tok in tokenize(text):
        lp = model.word_log_prob.get(tok)
        if lp is not None:
            s1 += lp[0]
            s2 += lp[1]
    return s2 - s1  # >0 means class 2


def run(n_total, overlap, train_size, pool_size, eval_size, flips, mode, seed, eval_on_pool=False):
    ss = generate_corpus(n_total, vocab_size=300, overlap=overlap, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    idx = rng.permutation(n_total)
    train = SampleSet([ss.samples[i] for i in idx[:train_size]], "generated")
    pool = [ss.samples[i] for i in idx[train_size : train_size + pool_size]]
    ev = [ss.samples[i] for i in idx[train_size + pool_size : train_size + pool_size + eval_size]]
    if eval_on_pool:
        ev = pool
    oracle = TargetOracle(train, calls_per_day=10**9)
    before = [oracle.model.classify_text(s.text) for s in ev]
    margins = np.array([margin(oracle.model, s.text) for s in pool])
    if mode == "ranked":
        order = np.argsort(margins)
        chosen = list(order[: flips // 2]) + list(order[-(flips // 2) :])
    else:
        chosen = rng.choice(pool_size, size=flips, replace=False)
    for i in chosen:
        lab = 1 if margins[i] < 0 else 2
        oracle.submit_feedback(pool[i].text, 3 - lab)
    oracle.retrain_with_feedback()
    after = [oracle.model.classify_text(s.text) for s in ev]
    return float(np.mean(np.asarray(before) != np.asarray(after)))


for train_size in (5000, 2000, 1000):
    for overlap in (0.3, 0.5, 0.7):
        args = dict(eval_on_pool=True)
        ds_ranked = [
            run(10000, overlap, train_size, 1000, 0, 100, "ranked", s, **args) for s in (1, 2, 3)
        ]
        ds_rand = [
            run(10000, overlap, train_size, 1000, 0, 100, "random", s, **args) for s in (1, 2, 3)
        ]
        print(
            f"eval=pool train={train_size:5d} overlap={overlap:.1f} ranked={np.mean(ds_ranked):.4f} "
            f"{ds_ranked} random={np.mean(ds_rand):.4f} {ds_rand}"
        )
