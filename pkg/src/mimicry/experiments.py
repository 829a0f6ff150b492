"""Seeded end-to-end attack experiments.

Each runner builds a fixed world (corpus, target, feature vocabulary) from an
Environment, opens an oracle through a provider (in-process or served over the
wire protocol), runs one attack arm, and returns a plain JSON-ready dict.
Identical seeds must produce identical dicts regardless of the provider, which
is what the protocol-equivalence checks assert.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .active import SelectionStrategy, run_active_learning, run_random_benchmark
from .attacks import plan_poison, plan_random_flip_baseline, run_causative, select_evasion
from .corpus import SampleSet, build_vocabulary, generate_corpus
from .extract import QueryBudget, collect_labels, config_digest, divergence, fit_substitute
from .nnet import TrainingConfig
from .oracle import TargetOracle
from .seeding import derive_seed
from .service import served_oracle


@dataclass(frozen=True)
class Environment:
    """The fixed world a seeded attack runs against."""

    corpus_n: int = 10000
    corpus_vocab: int = 800
    overlap: float = 0.3
    env_seed: int = 2024
    target_kind: str = "naive_bayes"
    target_train: int = 5000
    test_size: int = 1000
    calls_per_day: int = 1000
    feature_k: int = 600


def build_environment(env: Environment):
    """Corpus slices and the adversary's feature vocabulary.

    Returns (target_corpus, test_samples, pool, vocab); the pool and test
    samples keep their ground-truth labels, which only evasion evaluation and
    target training may read.
    """
    corpus = generate_corpus(
        env.corpus_n, env.corpus_vocab, env.overlap, derive_seed(env.env_seed, "corpus")
    )
    rng = np.random.default_rng(derive_seed(env.env_seed, "split"))
    idx = rng.permutation(env.corpus_n)
    cut1 = env.target_train
    cut2 = cut1 + env.test_size
    target_corpus = SampleSet([corpus.samples[i] for i in idx[:cut1]], "generated")
    test_samples = [corpus.samples[i] for i in idx[cut1:cut2]]
    pool = [corpus.samples[i] for i in idx[cut2:]]
    vocab = build_vocabulary(SampleSet(pool, "generated"), env.feature_k)
    return target_corpus, test_samples, pool, vocab


class InProcessOracles:
    """Provider yielding a directly held TargetOracle."""

    @contextmanager
    def open(self, corpus: SampleSet, *, kind: str, seed: int, calls_per_day: int):
        yield TargetOracle(corpus, kind=kind, seed=seed, calls_per_day=calls_per_day)


class ServedOracles:
    """Provider running the oracle behind the wire protocol on a local port."""

    @contextmanager
    def open(self, corpus: SampleSet, *, kind: str, seed: int, calls_per_day: int):
        oracle = TargetOracle(corpus, kind=kind, seed=seed, calls_per_day=calls_per_day)
        with served_oracle(oracle) as client:
            yield client


def _open_oracle(env: Environment, provider, target_corpus: SampleSet):
    return provider.open(
        target_corpus,
        kind=env.target_kind,
        seed=derive_seed(env.env_seed, "target"),
        calls_per_day=env.calls_per_day,
    )


def _pool_slices(pool, seed: int, *sizes: int):
    """Disjoint deterministic slices of a seeded pool shuffle."""
    if sum(sizes) > len(pool):
        raise ValueError(f"pool of {len(pool)} cannot supply slices {sizes}")
    rng = np.random.default_rng(derive_seed(seed, "pool-order"))
    order = rng.permutation(len(pool))
    out = []
    start = 0
    for size in sizes:
        out.append([pool[i] for i in order[start : start + size]])
        start += size
    return out


def extraction_run(
    env: Environment, provider, seed: int, budget: int, config: TrainingConfig
) -> dict:
    """Label `budget` pool samples through the oracle, fit a substitute, and
    measure its divergence from the target on the fixed test set."""
    target_corpus, test_samples, pool, vocab = build_environment(env)
    with _open_oracle(env, provider, target_corpus) as oracle:
        eval_budget = QueryBudget(len(test_samples))
        test_labeled = collect_labels(oracle, test_samples, eval_budget).labeled

        (queries,) = _pool_slices(pool, seed, budget)
        query_budget = QueryBudget(budget)
        collected = collect_labels(oracle, queries, query_budget)

        substitute, val_report = fit_substitute(
            collected.labeled, config, vocab, split_seed=derive_seed(seed, "fit-split")
        )
        test_report = divergence(
            test_labeled.labels(), substitute.predict_many(list(test_labeled))
        )
        stats = oracle.stats()
    return {
        "seed": seed,
        "budget": budget,
        "budget_used": query_budget.consumed,
        "days_advanced": collected.days_advanced,
        "config_digest": config_digest(config),
        "validation": val_report.to_dict(),
        "test": test_report.to_dict(),
        "d_max_test": test_report.d_max,
        "oracle_total_calls": stats["total_calls"],
        "budget_conserved": stats["total_calls"] == eval_budget.consumed + query_budget.consumed,
    }


def active_vs_benchmark_run(
    env: Environment,
    provider,
    seed: int,
    *,
    initial: int,
    draw: int,
    additional: int,
    config: TrainingConfig,
) -> dict:
    """One paired row: active learning versus the random benchmark at equal totals.

    The active arm draws `draw` pool samples and queries the `additional`
    closest to the threshold; the benchmark queries `additional` uniform
    samples. Both start from the same initial labels and are scored on the
    same oracle-labeled test set.
    """
    target_corpus, test_samples, pool, vocab = build_environment(env)
    with _open_oracle(env, provider, target_corpus) as oracle:
        eval_budget = QueryBudget(len(test_samples))
        test_labeled = collect_labels(oracle, test_samples, eval_budget).labeled

        initial_samples, rest = _pool_slices(pool, seed, initial, len(pool) - initial)
        initial_labeled = collect_labels(oracle, initial_samples, QueryBudget(initial)).labeled

        # both arms share one derived seed (common random numbers), so their
        # retrain initializations match and the pair differs only in which
        # samples were queried
        arm_seed = derive_seed(seed, "arm")
        strategy = SelectionStrategy("closest_k", k=additional)
        active_budget = QueryBudget(additional)
        _, rounds = run_active_learning(
            oracle,
            initial_labeled,
            rest,
            rounds=1,
            draw_per_round=draw,
            strategy=strategy,
            config=config,
            budget=active_budget,
            seed=arm_seed,
            vocab=vocab,
            test_set=test_labeled,
        )
        bench_budget = QueryBudget(additional)
        _, bench_report = run_random_benchmark(
            oracle,
            initial_labeled,
            rest,
            additional,
            config=config,
            budget=bench_budget,
            seed=arm_seed,
            vocab=vocab,
            test_set=test_labeled,
        )
    active_div = rounds[-1].divergence
    bench_div = bench_report.divergence
    return {
        "seed": seed,
        "initial_samples": initial,
        "additional_samples": additional,
        "total_samples": initial + additional,
        "pool_drawn": rounds[-1].pool_drawn,
        "d1_active": active_div.d1,
        "d2_active": active_div.d2,
        "d_max_active": active_div.d_max,
        "d1_benchmark": bench_div.d1,
        "d2_benchmark": bench_div.d2,
        "d_max_benchmark": bench_div.d_max,
        "budget_parity": active_budget.consumed == bench_budget.consumed == additional,
    }


def causative_run(
    env: Environment,
    provider,
    seed: int,
    *,
    p: float,
    pool_size: int,
    eval_size: int,
    plan_kind: str,
    substitute_budget: int,
    config: TrainingConfig,
) -> dict:
    """Poison the target's feedback channel and measure pre/post divergence.

    plan_kind "ranked" flips the top/bottom-scored samples; "random" flips a
    uniform sample of equal size (the control arm).
    """
    if plan_kind not in ("ranked", "random"):
        raise ValueError(f"unknown plan kind {plan_kind!r}")
    target_corpus, _, pool, vocab = build_environment(env)
    with _open_oracle(env, provider, target_corpus) as oracle:
        queries, poison_pool, eval_set = _pool_slices(
            pool, seed, substitute_budget, pool_size, eval_size
        )
        collected = collect_labels(oracle, queries, QueryBudget(substitute_budget))
        substitute, _ = fit_substitute(
            collected.labeled, config, vocab, split_seed=derive_seed(seed, "fit-split")
        )
        if plan_kind == "ranked":
            plan = plan_poison(substitute, poison_pool, p)
        else:
            size = 2 * math.floor(pool_size * p / 200.0)
            plan = plan_random_flip_baseline(
                substitute, poison_pool, size, seed=derive_seed(seed, "flip")
            )
        report = run_causative(oracle, plan, eval_set, QueryBudget(2 * eval_size))
    out = report.to_dict()
    out.update({"seed": seed, "plan_kind": plan_kind})
    return out


def evasion_run(
    env: Environment,
    provider,
    seed: int,
    *,
    n: int,
    candidate_size: int,
    substitute_budget: int,
    config: TrainingConfig,
) -> dict:
    """Compare the target's ground-truth error on near-threshold picks versus on
    a random baseline of the same size."""
    target_corpus, _, pool, vocab = build_environment(env)
    with _open_oracle(env, provider, target_corpus) as oracle:
        queries, candidates = _pool_slices(pool, seed, substitute_budget, candidate_size)
        collected = collect_labels(oracle, queries, QueryBudget(substitute_budget))
        substitute, _ = fit_substitute(
            collected.labeled, config, vocab, split_seed=derive_seed(seed, "fit-split")
        )
        selection = select_evasion(substitute, candidates, n, "average_error")
        rng = np.random.default_rng(derive_seed(seed, "baseline"))
        baseline = [candidates[i] for i in sorted(rng.choice(len(candidates), n, replace=False))]

        eval_budget = QueryBudget(2 * n)
        selected_labels = collect_labels(oracle, selection.samples, eval_budget).labeled
        baseline_labels = collect_labels(oracle, baseline, eval_budget).labeled

    selected_truth = [s.label for s in selection.samples]
    baseline_truth = [s.label for s in baseline]
    selected_rate = float(
        np.mean(np.asarray(selected_truth) != np.asarray(selected_labels.labels()))
    )
    baseline_rate = float(
        np.mean(np.asarray(baseline_truth) != np.asarray(baseline_labels.labels()))
    )
    return {
        "seed": seed,
        "n": n,
        "selected_error_rate": selected_rate,
        "baseline_error_rate": baseline_rate,
        "short": selection.short,
    }
