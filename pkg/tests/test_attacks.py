import numpy as np
import pytest

from mimicry.attacks import (
    EvasionSelection,
    PoisonItem,
    PoisonPlan,
    evaluate_evasion,
    evasion_error_rates,
    plan_poison,
    plan_random_flip_baseline,
    run_causative,
    select_evasion,
)
from mimicry.corpus import Sample, SampleSet, generate_corpus
from mimicry.extract import QueryBudget
from mimicry.oracle import TargetOracle


class FixedScoreSubstitute:
    def __init__(self, score_by_text, threshold):
        self.score_by_text = score_by_text
        self.threshold = threshold

    def scores(self, samples):
        return np.array([self.score_by_text[s.text] for s in samples])


def scored_pool(scores, threshold=0.17):
    pool = [Sample(f"t{i}") for i in range(len(scores))]
    sub = FixedScoreSubstitute({f"t{i}": s for i, s in enumerate(scores)}, threshold)
    return sub, pool


def test_select_evasion_average_error_example():
    sub, pool = scored_pool([0.05, 0.16, 0.18, 0.95])
    sel = select_evasion(sub, pool, 2, "average_error")
    assert [s.text for s in sel.samples] == ["t1", "t2"]
    assert not sel.short


def test_select_evasion_zero_and_validation():
    sub, pool = scored_pool([0.1, 0.2])
    assert select_evasion(sub, pool, 0).samples == []
    with pytest.raises(ValueError):
        select_evasion(sub, pool, 3)
    with pytest.raises(ValueError):
        select_evasion(sub, pool, 1, "sideways")


def test_select_evasion_one_sided_short_flag():
    sub, pool = scored_pool([0.05, 0.10, 0.16])  # all below threshold
    sel = select_evasion(sub, pool, 2, "force_1_to_2")
    assert sel.samples == []
    assert sel.short


def test_select_evasion_sides():
    scores = [0.05, 0.16, 0.18, 0.40, 0.95]
    sub, pool = scored_pool(scores)
    up = select_evasion(sub, pool, 2, "force_1_to_2")
    assert [s.text for s in up.samples] == ["t2", "t3"]
    assert all(scores[int(s.text[1:])] >= 0.17 for s in up.samples)
    down = select_evasion(sub, pool, 2, "force_2_to_1")
    assert [s.text for s in down.samples] == ["t0", "t1"]
    assert all(scores[int(s.text[1:])] < 0.17 for s in down.samples)


def test_select_evasion_distances_match_full_sort():
    rng = np.random.default_rng(3)
    for _ in range(20):
        scores = rng.uniform(0, 1, size=50).round(2)
        sub, pool = scored_pool(scores.tolist(), threshold=0.4)
        n = int(rng.integers(1, 20))
        sel = select_evasion(sub, pool, n, "average_error")
        dist = np.abs(scores - 0.4)
        cutoff = np.sort(dist)[n - 1]
        assert all(dist[int(s.text[1:])] <= cutoff + 1e-12 for s in sel.samples)
        assert len(sel.samples) == n


def test_evasion_error_rates_identity_and_perfect():
    report = evasion_error_rates([1, 2], [1, 2], [1, 2], [1, 2])
    assert report.selected_error_rate == report.baseline_error_rate == 0.0

    report = evasion_error_rates([1, 2], [2, 2], [1, 1], [1, 1])
    assert report.selected_error_rate == 0.5
    assert report.baseline_error_rate == 0.0


def test_evaluate_evasion_with_target_model():
    corpus = SampleSet(
        [Sample(f"alpha a{i}", 1) for i in range(10)]
        + [Sample(f"beta b{i}", 2) for i in range(10)],
        "file",
    )
    oracle = TargetOracle(corpus, calls_per_day=10**6)
    selected = [Sample("alpha fresh", 1), Sample("beta fresh", 2)]
    baseline = [Sample("alpha other", 1)]
    report = evaluate_evasion(oracle.model, selected, baseline)
    assert report.selected_error_rate == 0.0
    assert report.baseline_error_rate == 0.0
    with pytest.raises(ValueError):
        evaluate_evasion(oracle.model, [Sample("unlabeled")], baseline)


def test_plan_poison_counts():
    rng = np.random.default_rng(1)
    scores = rng.uniform(0, 1, size=1000).tolist()
    sub, pool = scored_pool(scores, threshold=0.5)
    plan = plan_poison(sub, pool, 10.0)
    assert len(plan) == 100
    assert plan.p == 10.0

    assert len(plan_poison(sub, pool, 0.0)) == 0
    with pytest.raises(ValueError):
        plan_poison(sub, pool, 150.0)


def test_plan_poison_extremes_on_distinct_scores():
    scores = [0.31, 0.05, 0.77, 0.42, 0.99, 0.11, 0.68, 0.24, 0.86, 0.53]
    sub, pool = scored_pool(scores, threshold=0.5)
    plan = plan_poison(sub, pool, 20.0)  # floor(10 * 20 / 200) = 1 per side
    assert len(plan) == 2
    texts = {item.sample.text for item in plan.items}
    assert texts == {"t1", "t4"}  # min score 0.05 and max score 0.99


def test_plan_poison_matches_full_sort():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(10, 1000))
        scores = rng.uniform(0, 1, size=n)
        if rng.uniform() < 0.3:
            scores = scores.round(1)
        sub, pool = scored_pool(scores.tolist(), threshold=0.5)
        p = float(rng.choice([5, 10, 20, 50]))
        plan = plan_poison(sub, pool, p)
        k = int(np.floor(n * p / 200))
        assert len(plan) == 2 * k
        order = sorted(range(n), key=lambda i: (scores[i], i))
        expect = {f"t{i}" for i in order[:k]} | {f"t{i}" for i in order[n - k :]}
        assert {item.sample.text for item in plan.items} == expect


def test_plan_poison_flips_against_substitute_prediction():
    rng = np.random.default_rng(4)
    scores = rng.uniform(0, 1, size=200)
    sub, pool = scored_pool(scores.tolist(), threshold=0.3)
    plan = plan_poison(sub, pool, 30.0)
    for item in plan.items:
        predicted = 1 if item.score < 0.3 else 2
        assert item.original_label == predicted
        assert item.flipped_label == 3 - predicted


def test_poison_plan_rejects_unflipped_items():
    with pytest.raises(ValueError):
        PoisonPlan(1.0, [PoisonItem(Sample("x"), 0.9, 2, 2)])


def test_plan_random_flip_baseline():
    scores = np.linspace(0, 1, 50).tolist()
    sub, pool = scored_pool(scores, threshold=0.5)
    plan = plan_random_flip_baseline(sub, pool, 10, seed=3)
    assert len(plan) == 10
    again = plan_random_flip_baseline(sub, pool, 10, seed=3)
    assert [i.sample.text for i in plan.items] == [i.sample.text for i in again.items]
    assert len(plan_random_flip_baseline(sub, pool, 0, seed=3)) == 0
    with pytest.raises(ValueError):
        plan_random_flip_baseline(sub, pool, 51, seed=3)


def test_plan_to_dict_carries_digests_not_texts():
    scores = [0.0, 0.5, 1.0]
    sub, pool = scored_pool(scores, threshold=0.5)
    plan = plan_poison(sub, pool, 70.0)
    d = plan.to_dict()
    assert d["size"] == len(plan)
    for item in d["items"]:
        assert set(item) == {"sample_digest", "score", "original_label", "flipped_label"}
        assert len(item["sample_digest"]) == 12


def _poison_environment(seed=0):
    corpus = generate_corpus(1600, vocab_size=600, overlap=0.7, seed=seed)
    rng = np.random.default_rng(seed + 5)
    idx = rng.permutation(len(corpus))
    target_train = SampleSet([corpus.samples[i] for i in idx[:400]], "generated")
    eval_set = [corpus.samples[i] for i in idx[400:800]]
    oracle = TargetOracle(target_train, calls_per_day=10**6)
    return oracle, eval_set


def test_run_causative_empty_plan_is_exact_noop():
    oracle, eval_set = _poison_environment()
    report = run_causative(oracle, PoisonPlan(0.0, []), eval_set, QueryBudget(2 * len(eval_set)))
    assert report.divergence.d_avg == 0.0
    assert report.plan_size == 0
    assert report.budget_used == 2 * len(eval_set)


def test_run_causative_with_flips_reports_impact():
    oracle, eval_set = _poison_environment(seed=2)
    flips = []
    for s in eval_set[:60]:
        label = oracle.model.classify_text(s.text)
        flips.append(PoisonItem(s, 0.0 if label == 2 else 1.0, label, 3 - label))
    plan = PoisonPlan(30.0, flips)
    budget = QueryBudget(10**6)
    report = run_causative(oracle, plan, eval_set[:400], budget)
    assert report.plan_size == 60
    assert report.divergence.d_avg >= 0.0
    assert report.budget_used == 800
    d = report.to_dict()
    assert {"d1", "d2", "d_avg", "plan_size", "p"} <= set(d)
