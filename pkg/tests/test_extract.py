import numpy as np
import pytest

from mimicry.corpus import Sample, SampleSet, Vocabulary, build_vocabulary
from mimicry.extract import (
    BudgetExceededError,
    QueryBudget,
    collect_labels,
    config_digest,
    divergence,
    fit_substitute,
    load_substitute,
    optimize_threshold,
    save_substitute,
)
from mimicry.nnet import TrainingConfig
from mimicry.oracle import TargetOracle


def brute_force_divergence(a, b):
    """Independent recount, one comparison at a time."""
    n1 = n2 = m1 = m2 = 0
    for ai, bi in zip(a, b):
        if ai == 1:
            n1 += 1
            if bi == 2:
                m1 += 1
        else:
            n2 += 1
            if bi == 1:
                m2 += 1
    return n1, n2, m1, m2


def brute_force_threshold(scores, labels):
    """Evaluate every candidate directly; first best wins (smallest threshold)."""
    distinct = sorted(set(scores))
    candidates = [0.0]
    candidates += [(a + b) / 2 for a, b in zip(distinct, distinct[1:])]
    candidates.append(1.0)
    best_t, best_d = None, None
    for t in candidates:
        preds = [1 if s < t else 2 for s in scores]
        n1, n2, m1, m2 = brute_force_divergence(labels, preds)
        d = max(m1 / n1, m2 / n2)
        if best_d is None or d < best_d:
            best_t, best_d = t, d
    return best_t, best_d


def two_word_oracle(calls_per_day=10**6):
    samples = [Sample(f"alpha x{i}", 1) for i in range(10)]
    samples += [Sample(f"beta y{i}", 2) for i in range(10)]
    return TargetOracle(SampleSet(samples, "file"), calls_per_day=calls_per_day)


def test_budget_accounting():
    budget = QueryBudget(3)
    assert budget.remaining == 3
    budget.spend(2)
    assert (budget.consumed, budget.remaining) == (2, 1)
    with pytest.raises(BudgetExceededError):
        budget.spend(2)
    assert budget.consumed == 2


def test_collect_labels_within_budget():
    oracle = two_word_oracle()
    samples = [Sample("alpha") for _ in range(10)]
    budget = QueryBudget(10)
    result = collect_labels(oracle, samples, budget)
    assert len(result.labeled) == 10
    assert budget.consumed == 10
    assert all(s.label == 1 for s in result.labeled)
    assert result.days_advanced == 0


def test_collect_labels_budget_error_keeps_partials():
    oracle = two_word_oracle()
    samples = [Sample("alpha") for _ in range(10)]
    budget = QueryBudget(9)
    with pytest.raises(BudgetExceededError) as exc:
        collect_labels(oracle, samples, budget)
    assert budget.consumed == 9
    assert len(exc.value.partial.labeled) == 9


def test_collect_labels_spans_days():
    oracle = two_word_oracle(calls_per_day=1000)
    samples = [Sample("beta") for _ in range(2500)]
    budget = QueryBudget(2500)
    result = collect_labels(oracle, samples, budget)
    assert len(result.labeled) == 2500
    assert result.days_advanced == 2  # days 0, 1, 2
    assert oracle.stats()["day"] == 2


def test_collect_labels_zero_quota_raises():
    oracle = two_word_oracle(calls_per_day=0)
    from mimicry.oracle import RateLimitedError

    with pytest.raises(RateLimitedError):
        collect_labels(oracle, [Sample("alpha")], QueryBudget(5))


def test_budget_conservation_against_oracle_stats():
    oracle = two_word_oracle()
    budget = QueryBudget(40)
    collect_labels(oracle, [Sample("alpha")] * 25, budget)
    collect_labels(oracle, [Sample("beta")] * 10, budget)
    assert oracle.stats()["total_calls"] == budget.consumed == 35


def test_divergence_hand_examples():
    rep = divergence([1, 2, 1, 2], [1, 2, 1, 2])
    assert (rep.d1, rep.d2, rep.d_max, rep.d_avg) == (0.0, 0.0, 0.0, 0.0)

    rep = divergence([1, 1, 2, 2], [1, 2, 2, 1])
    assert (rep.n1, rep.n2, rep.m1, rep.m2) == (2, 2, 1, 1)
    assert (rep.d1, rep.d2, rep.d_avg) == (0.5, 0.5, 0.5)

    rep = divergence([1, 2, 2, 1], [2, 1, 1, 2])
    assert (rep.d1, rep.d2, rep.d_max, rep.d_avg) == (1.0, 1.0, 1.0, 1.0)

    with pytest.raises(ValueError):
        divergence([1, 1], [1, 2])
    with pytest.raises(ValueError):
        divergence([1, 1], [1, 2, 2])


def test_divergence_matches_brute_force_on_random_vectors():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(2, 200))
        a = rng.integers(1, 3, size=n)
        if len(set(a.tolist())) < 2:
            a[0], a[1] = 1, 2
        b = rng.integers(1, 3, size=n)
        rep = divergence(a, b)
        assert (rep.n1, rep.n2, rep.m1, rep.m2) == brute_force_divergence(a, b)


def test_optimize_threshold_separable_example():
    t, d = optimize_threshold([0.1, 0.2, 0.6, 0.9], [1, 1, 2, 2])
    assert t == pytest.approx(0.4)
    assert d == 0.0


def test_optimize_threshold_anti_correlated_matches_brute_force():
    scores = [0.9, 0.8, 0.1, 0.2]
    labels = [1, 1, 2, 2]
    t, d = optimize_threshold(scores, labels)
    bt, bd = brute_force_threshold(scores, labels)
    assert d == pytest.approx(bd)
    assert t == pytest.approx(bt)
    assert d > 0


def test_optimize_threshold_identical_scores_tie_rule():
    t, d = optimize_threshold([0.5, 0.5, 0.5], [1, 2, 1])
    assert t == 0.0  # ties resolve to the smallest candidate
    assert d == 1.0


def test_optimize_threshold_never_beaten_by_brute_force():
    rng = np.random.default_rng(23)
    for _ in range(100):
        n = int(rng.integers(2, 200))
        scores = rng.uniform(0, 1, size=n)
        if rng.uniform() < 0.3:
            scores = np.round(scores, 1)  # force score ties
        labels = rng.integers(1, 3, size=n)
        if len(set(labels.tolist())) < 2:
            labels[0], labels[1] = 1, 2
        t, d = optimize_threshold(scores, labels)
        bt, bd = brute_force_threshold(scores.tolist(), labels.tolist())
        assert d == pytest.approx(bd)
        assert t == pytest.approx(bt)


def test_optimize_threshold_rejects_single_class():
    with pytest.raises(ValueError):
        optimize_threshold([0.1, 0.9], [1, 1])


def single_word_labeled_set(n=400, seed=0):
    """T's label depends only on the presence of one vocabulary word."""
    rng = np.random.default_rng(seed)
    filler = [f"f{i}" for i in range(30)]
    samples = []
    for _ in range(n):
        words = [filler[i] for i in rng.integers(0, 30, size=5)]
        if rng.uniform() < 0.5:
            words.append("zzz")
            label = 2
        else:
            label = 1
        rng.shuffle(words)
        samples.append(Sample(" ".join(words), label))
    return SampleSet(samples, "generated")


def test_fit_substitute_learns_single_word_rule():
    labeled = single_word_labeled_set()
    vocab = build_vocabulary(labeled, 40)
    config = TrainingConfig(neurons_per_layer=10, epochs=30, seed=1, minibatch_size=10)
    substitute, report = fit_substitute(labeled, config, vocab, split_seed=5)
    assert report.d_max < 0.05
    assert substitute.predict(Sample("zzz f1 f2")) == 2
    assert substitute.predict(Sample("f1 f2 f3")) == 1


def test_fit_substitute_splits_half_and_half():
    labeled = single_word_labeled_set(101)
    vocab = build_vocabulary(labeled, 40)
    config = TrainingConfig(neurons_per_layer=4, epochs=1, seed=1)
    _, report = fit_substitute(labeled, config, vocab, split_seed=2)
    assert report.n1 + report.n2 == 101 - 101 // 2


def test_fit_substitute_rejects_single_class():
    labeled = SampleSet([Sample("a b", 1), Sample("c d", 1)], "file")
    vocab = Vocabulary([("a", 1), ("b", 1)])
    with pytest.raises(ValueError):
        fit_substitute(labeled, TrainingConfig(), vocab, split_seed=0)


def test_substitute_decision_rule_matches_threshold():
    labeled = single_word_labeled_set(200, seed=3)
    vocab = build_vocabulary(labeled, 40)
    config = TrainingConfig(neurons_per_layer=6, epochs=10, seed=2, minibatch_size=20)
    substitute, _ = fit_substitute(labeled, config, vocab, split_seed=1)
    probe = single_word_labeled_set(50, seed=9)
    scores = substitute.scores(list(probe))
    preds = substitute.predict_many(list(probe))
    for s, score, pred in zip(probe, scores, preds):
        assert substitute.predict(s) == pred
        assert pred == (1 if score < substitute.threshold else 2)


def test_config_digest_stable_and_distinct():
    a = TrainingConfig(seed=1)
    assert config_digest(a) == config_digest(TrainingConfig(seed=1))
    assert config_digest(a) != config_digest(TrainingConfig(seed=2))


def test_substitute_save_load_round_trip(tmp_path):
    labeled = single_word_labeled_set(100, seed=4)
    vocab = build_vocabulary(labeled, 40)
    config = TrainingConfig(neurons_per_layer=4, epochs=2, seed=3)
    substitute, _ = fit_substitute(labeled, config, vocab, split_seed=7)
    path = tmp_path / "substitute.json"
    save_substitute(path, substitute, config)
    loaded, config2 = load_substitute(path)
    assert config2 == config
    assert loaded.threshold == substitute.threshold
    probe = Sample("zzz f3")
    assert loaded.score(probe) == substitute.score(probe)
