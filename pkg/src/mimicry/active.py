"""Active-learning refinement of the substitute under a query budget, and the
random-selection benchmark it is compared against.

Per round: draw unseen pool samples, score them with the current substitute,
query the oracle only for samples whose score is close to the threshold, fold
the new labels in, and retrain from scratch. The benchmark spends the same
query budget on uniformly random samples.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nnet
from .corpus import Sample, SampleSet, Vocabulary, featurize_all
from .extract import (
    BudgetExceededError,
    DivergenceReport,
    QueryBudget,
    SubstituteClassifier,
    collect_labels,
    divergence,
    optimize_threshold,
)
from .seeding import derive_seed

STRATEGY_KINDS = ("margin", "closest_k")


@dataclass(frozen=True)
class SelectionStrategy:
    """How to pick oracle-worthy samples from a scored pool.

    margin: every sample with |score - threshold| <= margin.
    closest_k: the k samples with the smallest |score - threshold|.
    """

    kind: str = "margin"
    margin: float = 0.25
    k: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "margin" and not 0.0 < self.margin <= 1.0:
            raise ValueError("margin must be in (0, 1]")
        if self.kind == "closest_k" and self.k < 0:
            raise ValueError("k must be >= 0")


def margin_selection(scores, threshold: float, margin: float) -> list[int]:
    dist = np.abs(np.asarray(scores, dtype=float) - threshold)
    return [int(i) for i in np.flatnonzero(dist <= margin)]


def closest_k_selection(scores, threshold: float, k: int) -> list[int]:
    dist = np.abs(np.asarray(scores, dtype=float) - threshold)
    picked = np.argsort(dist, kind="stable")[:k]  # stable: ties keep pool order
    return sorted(int(i) for i in picked)


def select_uncertain(
    substitute: SubstituteClassifier, pool, strategy: SelectionStrategy
) -> list[Sample]:
    """Pool samples the substitute is least certain about, in pool order."""
    if len(pool) == 0:
        raise ValueError("pool is empty")
    scores = substitute.scores(pool)
    if strategy.kind == "margin":
        idx = margin_selection(scores, substitute.threshold, strategy.margin)
    else:
        idx = closest_k_selection(scores, substitute.threshold, strategy.k)
    return [pool[i] for i in idx]


@dataclass
class RoundReport:
    round_index: int
    pool_drawn: int
    selected: int
    budget_consumed: int
    days_advanced: int
    divergence: DivergenceReport
    truncated: bool = False
    max_selected_distance: float | None = None

    def to_dict(self) -> dict:
        out = {
            "round_index": self.round_index,
            "pool_drawn": self.pool_drawn,
            "selected": self.selected,
            "budget_consumed": self.budget_consumed,
            "days_advanced": self.days_advanced,
            "truncated": self.truncated,
            "max_selected_distance": self.max_selected_distance,
        }
        out.update(self.divergence.to_dict())
        return out


def refit(labeled, config: nnet.TrainingConfig, vocab: Vocabulary) -> SubstituteClassifier:
    """Full retrain on everything collected so far; threshold re-optimized on the
    same data (labels are too scarce in this loop to hold half out)."""
    samples = list(labeled)
    feats = featurize_all([s.text for s in samples], vocab)
    y = np.asarray([s.label for s in samples])
    params, norm = nnet.train(list(zip(feats, y)), config)
    scores = nnet.predict_scores(params, norm, feats)
    threshold, _ = optimize_threshold(scores, y)
    return SubstituteClassifier(params, norm, threshold, vocab)


def _clean_pool(pool, *reserved_sets) -> list[Sample]:
    """Drop duplicate texts and anything already labeled elsewhere, keeping order."""
    reserved = set()
    for rs in reserved_sets:
        reserved.update(s.text for s in rs)
    seen = set()
    out = []
    for s in pool:
        if s.text in reserved or s.text in seen:
            continue
        seen.add(s.text)
        out.append(s)
    return out


def _evaluate(substitute: SubstituteClassifier, test_set: SampleSet) -> DivergenceReport:
    preds = substitute.predict_many(list(test_set))
    return divergence(test_set.labels(), preds)


def run_active_learning(
    oracle,
    initial_labeled: SampleSet,
    pool,
    *,
    rounds: int,
    draw_per_round: int,
    strategy: SelectionStrategy,
    config: nnet.TrainingConfig,
    budget: QueryBudget,
    seed: int,
    vocab: Vocabulary,
    test_set: SampleSet,
) -> tuple[SubstituteClassifier, list[RoundReport]]:
    """Iteratively improve the substitute by querying only uncertain samples.

    Each round draws `draw_per_round` previously undrawn pool samples, selects
    per `strategy`, labels the selection through the oracle, and retrains from
    fresh initialization on everything labeled so far. Evaluation always uses
    the fixed `test_set` (never queried for training). No sample is ever
    queried twice in a run; if the budget runs out mid-round the partial round
    is kept and flagged truncated.
    """
    if len(set(initial_labeled.labels())) < 2:
        raise ValueError("initial labeled data must contain both classes")
    pool = _clean_pool(pool, initial_labeled, test_set)

    substitute = refit(initial_labeled, replace(config, seed=derive_seed(seed, "round0")), vocab)
    training = list(initial_labeled)
    queried: set[str] = set()
    reports: list[RoundReport] = []
    rng = np.random.default_rng(derive_seed(seed, "draw"))
    undrawn = list(range(len(pool)))

    for round_index in range(1, rounds + 1):
        take = min(draw_per_round, len(undrawn))
        if take == 0:
            break
        picked = rng.choice(len(undrawn), size=take, replace=False)
        drawn_ids = sorted(undrawn[i] for i in picked)
        drawn_set = set(drawn_ids)
        undrawn = [i for i in undrawn if i not in drawn_set]
        drawn = [pool[i] for i in drawn_ids]

        scores = substitute.scores(drawn)
        if strategy.kind == "margin":
            sel = margin_selection(scores, substitute.threshold, strategy.margin)
        else:
            sel = closest_k_selection(scores, substitute.threshold, strategy.k)
        selected = [drawn[i] for i in sel]
        max_dist = (
            float(np.max(np.abs(scores[sel] - substitute.threshold))) if sel else None
        )

        truncated = False
        try:
            result = collect_labels(oracle, selected, budget)
            newly, days = result.labeled, result.days_advanced
        except BudgetExceededError as exc:
            newly, days = exc.partial.labeled, exc.partial.days_advanced
            truncated = True
        for s in newly:
            if s.text in queried:
                raise RuntimeError("sample queried twice in one run")
            queried.add(s.text)

        training.extend(newly)
        substitute = refit(
            training, replace(config, seed=derive_seed(seed, f"round{round_index}")), vocab
        )
        reports.append(
            RoundReport(
                round_index=round_index,
                pool_drawn=take,
                selected=len(newly),
                budget_consumed=len(newly),
                days_advanced=days,
                divergence=_evaluate(substitute, test_set),
                truncated=truncated,
                max_selected_distance=max_dist,
            )
        )
        if truncated:
            break
    return substitute, reports


def run_random_benchmark(
    oracle,
    initial_labeled: SampleSet,
    pool,
    total_additional: int,
    *,
    config: nnet.TrainingConfig,
    budget: QueryBudget,
    seed: int,
    vocab: Vocabulary,
    test_set: SampleSet,
) -> tuple[SubstituteClassifier, RoundReport]:
    """Spend the same query budget on uniformly random pool samples, retrain once."""
    if len(set(initial_labeled.labels())) < 2:
        raise ValueError("initial labeled data must contain both classes")
    pool = _clean_pool(pool, initial_labeled, test_set)
    if total_additional > len(pool):
        raise ValueError("total_additional exceeds pool size")

    if total_additional == 0:
        substitute = refit(
            initial_labeled, replace(config, seed=derive_seed(seed, "round0")), vocab
        )
        report = RoundReport(1, 0, 0, 0, 0, _evaluate(substitute, test_set))
        return substitute, report

    rng = np.random.default_rng(derive_seed(seed, "draw"))
    picked = sorted(int(i) for i in rng.choice(len(pool), size=total_additional, replace=False))
    chosen = [pool[i] for i in picked]

    truncated = False
    try:
        result = collect_labels(oracle, chosen, budget)
        newly, days = result.labeled, result.days_advanced
    except BudgetExceededError as exc:
        newly, days = exc.partial.labeled, exc.partial.days_advanced
        truncated = True

    training = list(initial_labeled) + list(newly)
    substitute = refit(training, replace(config, seed=derive_seed(seed, "round1")), vocab)
    report = RoundReport(
        round_index=1,
        pool_drawn=len(chosen),
        selected=len(newly),
        budget_consumed=len(newly),
        days_advanced=days,
        divergence=_evaluate(substitute, test_set),
        truncated=truncated,
    )
    return substitute, report
