"""Scratch: grid over corpus regimes for causative-attack sensitivity."""
import numpy as np

from mimicry.corpus import Sample, SampleSet, tokenize
from mimicry.oracle import TargetOracle


def gen(n, vocab_size, overlap, seed, lo, hi):
    rng = np.random.default_rng(seed)
    n_shared = int(round(vocab_size * overlap))
    n_excl = vocab_size - n_shared
    words = [f"w{i:05d}" for i in range(n_shared + 2 * n_excl)]
    shared = words[:n_shared]
    cv = {1: shared + words[n_shared : n_shared + n_excl], 2: shared + words[n_shared + n_excl :]}
    weights = {}
    for c in (1, 2):
        ranks = np.empty(vocab_size)
        ranks[rng.permutation(vocab_size)] = np.arange(1, vocab_size + 1)
        w = 1.0 / ranks
        weights[c] = w / w.sum()
    samples = []
    for i in range(n):
        c = 1 + (i % 2)
        length = int(rng.integers(lo, hi + 1))
        idx = rng.choice(vocab_size, size=length, replace=True, p=weights[c])
        samples.append(Sample(" ".join(cv[c][j] for j in idx), c))
    return SampleSet(samples, "generated")


def margin(model, text):
    s1, s2 = model.log_prior[1], model.log_prior[2]
    for tok in tokenize(text):
        lp = model.word_log_prob.get(tok)
        if lp is not None:
            s1 += lp[0]
            s2 += lp[1]
    return s2 - s1


def run(vocab_size, overlap, lo, hi, train_size, mode, seed):
    ss = gen(10000, vocab_size, overlap, seed, lo, hi)
    rng = np.random.default_rng(seed + 1000)
    idx = rng.permutation(len(ss))
    train = SampleSet([ss.samples[i] for i in idx[:train_size]], "generated")
    pool = [ss.samples[i] for i in idx[train_size : train_size + 1000]]
    ev = [ss.samples[i] for i in idx[train_size + 1000 : train_size + 2000]]
    oracle = TargetOracle(train, calls_per_day=10**9)
    before = [oracle.model.classify_text(s.text) for s in ev]
    margins = np.array([margin(oracle.model, s.text) for s in pool])
    if mode == "ranked":
        order = np.argsort(margins)
        chosen = list(order[:50]) + list(order[-50:])
    else:
        chosen = rng.choice(1000, size=100, replace=False)
    for i in chosen:
        lab = 1 if margins[i] < 0 else 2
        oracle.submit_feedback(pool[i].text, 3 - lab)
    oracle.retrain_with_feedback()
    after = [oracle.model.classify_text(s.text) for s in ev]
    # also NB heldout accuracy pre-attack
    acc = np.mean([oracle.original_model.classify_text(s.text) == s.label for s in ev])
    return float(np.mean(np.asarray(before) != np.asarray(after))), float(acc)


for vocab_size in (1000, 2000):
    for lo, hi in ((2, 8), (3, 10)):
        for train_size in (500, 1000):
            for overlap in (0.5, 0.8):
                rk = [run(vocab_size, overlap, lo, hi, train_size, "ranked", s) for s in (1, 2)]
                rd = [run(vocab_size, overlap, lo, hi, train_size, "random", s) for s in (1, 2)]
                print(
                    f"V={vocab_size} len={lo}-{hi} train={train_size} ov={overlap}: "
                    f"ranked={[round(x[0], 4) for x in rk]} random={[round(x[0], 4) for x in rd]} "
                    f"acc={rk[0][1]:.3f}"
                )
