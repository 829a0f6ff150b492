import numpy as np
import pytest

from mimicry.corpus import (
    CorpusFormatError,
    Sample,
    SampleSet,
    Vocabulary,
    build_vocabulary,
    featurize,
    featurize_all,
    generate_corpus,
    load_corpus,
    save_corpus,
    tokenize,
)
from mimicry.oracle import train_target


def test_sample_validation():
    with pytest.raises(ValueError):
        Sample("   ")
    with pytest.raises(ValueError):
        Sample("ok", label=3)
    assert Sample("ok", label=2).label == 2
    assert Sample("ok").label is None


def test_tokenize_lowercases_and_splits_nonalnum():
    assert tokenize("The cat, the DOG!") == ["the", "cat", "the", "dog"]
    assert tokenize("a_b") == ["a", "b"]
    assert tokenize("!!!") == []


def test_load_corpus_labeled(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("1\thello world\n2\tfoo\n", encoding="utf-8")
    ss = load_corpus(path)
    assert len(ss) == 2
    assert ss[0] == Sample("hello world", 1)
    assert ss[1] == Sample("foo", 2)
    assert ss.provenance == "file"


def test_load_corpus_bad_label(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("3\tx\n", encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="line 1"):
        load_corpus(path)


def test_load_corpus_pool_file(tmp_path):
    path = tmp_path / "pool.txt"
    path.write_text("just text\n", encoding="utf-8")
    ss = load_corpus(path)
    assert len(ss) == 1
    assert ss[0].label is None


def test_load_corpus_empty_file(tmp_path):
    path = tmp_path / "empty.tsv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(CorpusFormatError):
        load_corpus(path)


def test_load_corpus_skips_blank_lines(tmp_path):
    path = tmp_path / "c.tsv"
    path.write_text("1\ta\n\n2\tb\n", encoding="utf-8")
    assert len(load_corpus(path)) == 2


def test_save_load_round_trip(tmp_path):
    ss = SampleSet([Sample("a b", 1), Sample("c d", 2), Sample("pool only")], "file")
    path = tmp_path / "rt.tsv"
    save_corpus(ss, path)
    again = load_corpus(path)
    assert again.samples == ss.samples
    # saving what was loaded reproduces the file byte for byte
    path2 = tmp_path / "rt2.tsv"
    save_corpus(again, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_generate_corpus_disjoint_classes_at_zero_overlap():
    ss = generate_corpus(4, vocab_size=50, overlap=0.0, seed=7)
    assert len(ss) == 4
    tokens = {1: set(), 2: set()}
    for s in ss:
        tokens[s.label].update(tokenize(s.text))
    assert tokens[1] and tokens[2]
    assert tokens[1].isdisjoint(tokens[2])


def test_generate_corpus_deterministic():
    a = generate_corpus(50, vocab_size=40, overlap=0.5, seed=3)
    b = generate_corpus(50, vocab_size=40, overlap=0.5, seed=3)
    assert a.samples == b.samples
    c = generate_corpus(50, vocab_size=40, overlap=0.5, seed=4)
    assert a.samples != c.samples


def test_generate_corpus_balanced_classes():
    ss = generate_corpus(101, vocab_size=30, overlap=0.2, seed=1)
    labels = ss.labels()
    assert labels.count(1) == 51
    assert labels.count(2) == 50


def test_generate_corpus_validation():
    with pytest.raises(ValueError):
        generate_corpus(0, 10, 0.5, 1)
    with pytest.raises(ValueError):
        generate_corpus(10, 10, 1.5, 1)


def test_generated_corpus_is_separable_for_naive_bayes():
    # calibration check: the default-style corpus supports >80% held-out accuracy
    ss = generate_corpus(10000, vocab_size=300, overlap=0.3, seed=1)
    train = SampleSet(ss.samples[:5000], "generated")
    test = ss.samples[5000:]
    model = train_target(train, "naive_bayes")
    correct = sum(model.classify_text(s.text) == s.label for s in test)
    assert correct / len(test) > 0.8


def test_build_vocabulary_counts_and_tie_break():
    ss = SampleSet([Sample("a b a"), Sample("b c")], "file")
    vocab = build_vocabulary(ss, 2)
    assert vocab.words == [("a", 2), ("b", 2)]


def test_build_vocabulary_k_larger_than_distinct():
    ss = SampleSet([Sample("x y"), Sample("y z")], "file")
    vocab = build_vocabulary(ss, 100)
    assert len(vocab) == 3
    assert vocab.words[0] == ("y", 2)


def test_build_vocabulary_top_2000_at_scale():
    ss = generate_corpus(4000, vocab_size=1500, overlap=0.2, seed=9)
    vocab = build_vocabulary(ss, 2000)
    assert len(vocab) == 2000


def test_vocabulary_frequencies_non_increasing_random_corpora():
    rng = np.random.default_rng(0)
    for trial in range(10):
        ss = generate_corpus(int(rng.integers(20, 200)), 40, float(rng.uniform(0, 1)), trial)
        vocab = build_vocabulary(ss, 25)
        counts = [c for _, c in vocab.words]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_vocabulary_save_load_round_trip(tmp_path):
    vocab = Vocabulary([("b", 5), ("a", 3), ("c", 3)])
    path = tmp_path / "vocab.tsv"
    vocab.save(path)
    assert Vocabulary.load(path).words == vocab.words


def test_featurize_counts():
    vocab = Vocabulary([("the", 10), ("cat", 5), ("dog", 4)])
    assert featurize("the cat the", vocab).tolist() == [2, 1, 0]


def test_featurize_no_tokens_and_oov():
    vocab = Vocabulary([("the", 10), ("cat", 5)])
    assert featurize("!!!", vocab).tolist() == [0, 0]
    assert featurize("zebra yak", vocab).tolist() == [0, 0]


def test_featurize_position_independent():
    rng = np.random.default_rng(5)
    vocab = Vocabulary([(f"w{i}", 10 - i) for i in range(8)])
    words = [f"w{i}" for i in range(10)]  # two words are out of vocabulary
    for _ in range(20):
        toks = [words[i] for i in rng.integers(0, 10, size=12)]
        base = featurize(" ".join(toks), vocab)
        rng.shuffle(toks)
        assert featurize(" ".join(toks), vocab).tolist() == base.tolist()


def test_featurize_all_matches_featurize():
    vocab = Vocabulary([("a", 3), ("b", 2)])
    texts = ["a a b", "b", "c"]
    mat = featurize_all(texts, vocab)
    for row, text in zip(mat, texts):
        assert row.tolist() == featurize(text, vocab).tolist()
