import pytest

from mimicry.corpus import Sample, SampleSet, generate_corpus
from mimicry.extract import divergence
from mimicry.oracle import (
    InvalidRequestError,
    RateLimitedError,
    TargetOracle,
    train_target,
)


def disjoint_corpus(n_per_class=20):
    samples = []
    for i in range(n_per_class):
        samples.append(Sample(f"alpha alef a{i}", 1))
        samples.append(Sample(f"beta bet b{i}", 2))
    return SampleSet(samples, "file")


def test_train_target_disjoint_vocabulary():
    model = train_target(disjoint_corpus())
    assert model.classify_text("alpha alpha") == 1
    assert model.classify_text("beta beta") == 2


def test_train_target_deterministic():
    corpus = disjoint_corpus()
    a = train_target(corpus, "naive_bayes")
    b = train_target(corpus, "naive_bayes")
    assert a.params_digest() == b.params_digest()


def test_train_target_rejects_single_class():
    corpus = SampleSet([Sample("a", 1), Sample("b", 1)], "file")
    with pytest.raises(ValueError):
        train_target(corpus)


def test_naive_bayes_heldout_accuracy():
    ss = generate_corpus(4000, vocab_size=300, overlap=0.3, seed=11)
    train = SampleSet(ss.samples[:2000], "generated")
    model = train_target(train, "naive_bayes")
    test = ss.samples[2000:]
    correct = sum(model.classify_text(s.text) == s.label for s in test)
    assert correct / len(test) > 0.8


@pytest.mark.parametrize("kind", ["logistic", "fnn"])
def test_other_target_kinds(kind):
    corpus = disjoint_corpus(30)
    model = train_target(corpus, kind, seed=3)
    assert model.classify_text("alpha alef") == 1
    assert model.classify_text("beta bet") == 2
    again = train_target(corpus, kind, seed=3)
    assert model.params_digest() == again.params_digest()


def make_oracle(calls_per_day=5, **kw):
    return TargetOracle(disjoint_corpus(), calls_per_day=calls_per_day, **kw)


def test_quota_boundary_and_day_reset():
    oracle = make_oracle(calls_per_day=5)
    for _ in range(5):
        oracle.classify("alpha")
    with pytest.raises(RateLimitedError) as exc:
        oracle.classify("alpha")
    assert exc.value.retry_after_days == 1
    assert oracle.stats()["calls_used_today"] == 5
    assert oracle.advance_day() == 1
    stats = oracle.stats()
    assert stats["calls_used_today"] == 0
    assert stats["calls_per_day"] == 5
    assert oracle.classify("alpha") == 1
    assert oracle.stats()["total_calls"] == 6


def test_invalid_text_does_not_consume_quota():
    oracle = make_oracle()
    with pytest.raises(InvalidRequestError):
        oracle.classify("")
    with pytest.raises(InvalidRequestError):
        oracle.classify(None)
    assert oracle.stats()["calls_used_today"] == 0


def test_rejected_calls_do_not_mutate_state():
    oracle = make_oracle(calls_per_day=1)
    oracle.classify("alpha")
    for _ in range(3):
        with pytest.raises(RateLimitedError):
            oracle.classify("alpha")
    stats = oracle.stats()
    assert stats["calls_used_today"] == 1
    assert stats["total_calls"] == 1


def test_feedback_buffer_appends_and_allows_duplicates():
    oracle = make_oracle()
    for _ in range(100):
        oracle.submit_feedback("alpha alef", 2)
    assert oracle.feedback_size() == 100


def test_feedback_not_rate_limited_by_default():
    oracle = make_oracle(calls_per_day=1)
    oracle.classify("alpha")
    for _ in range(10):
        oracle.submit_feedback("beta bet", 1)  # quota exhausted, still accepted
    assert oracle.feedback_size() == 10
    assert oracle.stats()["calls_used_today"] == 1


def test_feedback_rate_limit_toggle():
    oracle = make_oracle(calls_per_day=2, feedback_rate_limited=True)
    oracle.submit_feedback("alpha", 1)
    oracle.submit_feedback("alpha", 1)
    with pytest.raises(RateLimitedError):
        oracle.submit_feedback("alpha", 1)


def test_feedback_validation():
    oracle = make_oracle()
    with pytest.raises(InvalidRequestError):
        oracle.submit_feedback("alpha", 3)
    with pytest.raises(InvalidRequestError):
        oracle.submit_feedback("", 1)


def test_feedback_is_staged_until_retrain():
    oracle = make_oracle(calls_per_day=100)
    before = oracle.classify("alpha alef")
    oracle.submit_feedback("alpha alef", 2)
    assert oracle.classify("alpha alef") == before
    oracle.retrain_with_feedback()
    assert oracle.feedback_size() == 0


def test_retrain_empty_buffer_is_identity():
    oracle = make_oracle()
    before = oracle.model.params_digest()
    oracle.retrain_with_feedback()
    assert oracle.model.params_digest() == before
    assert oracle.original_model.params_digest() == before


def test_retrain_with_consistent_feedback_barely_moves_the_model():
    ss = generate_corpus(2000, vocab_size=200, overlap=0.3, seed=5)
    corpus = SampleSet(ss.samples[:1000], "generated")
    holdout = ss.samples[1000:1500]
    extra = ss.samples[1500:1600]
    oracle = TargetOracle(corpus, calls_per_day=10**6)
    before = [oracle.model.classify_text(s.text) for s in holdout]
    for s in extra:
        oracle.submit_feedback(s.text, oracle.model.classify_text(s.text))
    oracle.retrain_with_feedback()
    after = [oracle.model.classify_text(s.text) for s in holdout]
    assert divergence(before, after).d_avg <= 0.02


def test_retrain_with_flipped_feedback_moves_the_model():
    ss = generate_corpus(2000, vocab_size=1000, overlap=0.8, seed=6)
    corpus = SampleSet(ss.samples[:500], "generated")
    holdout = ss.samples[1000:1500]
    extra = ss.samples[1500:1600]
    oracle = TargetOracle(corpus, calls_per_day=10**6)
    original_digest = oracle.original_model.params_digest()
    before = [oracle.model.classify_text(s.text) for s in holdout]
    for s in extra:
        oracle.submit_feedback(s.text, 3 - oracle.model.classify_text(s.text))
    oracle.retrain_with_feedback()
    after = [oracle.model.classify_text(s.text) for s in holdout]
    assert divergence(before, after).d_avg > 0
    # the pre-attack snapshot is retained untouched
    assert oracle.original_model.params_digest() == original_digest
    assert oracle.model.params_digest() != original_digest


def test_feedback_overrides_corpus_label_on_same_text():
    corpus = SampleSet([Sample("alpha", 1), Sample("beta", 2), Sample("gamma", 1)], "file")
    oracle = TargetOracle(corpus, calls_per_day=100)
    oracle.submit_feedback("gamma", 2)
    oracle.retrain_with_feedback()
    assert oracle.model.classify_text("gamma") == 2
