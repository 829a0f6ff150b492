"""Experiment configuration and the end-to-end pipeline: corpus prep, target
training, extraction, active-learning refinement with its random benchmark,
evasion, poisoning, and report emission.

All randomness derives from one master seed, so a run is reproducible byte for
byte. Every oracle interaction goes through the classify/feedback/retrain
channels (never the model object), which keeps in-process and wire-protocol
runs identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import figures
from .active import SelectionStrategy, run_active_learning, run_random_benchmark
from .attacks import plan_poison, run_causative, select_evasion
from .corpus import SampleSet, build_vocabulary, generate_corpus, load_corpus
from .extract import (
    QueryBudget,
    collect_labels,
    config_digest,
    divergence,
    extraction_report,
    fit_substitute,
    save_substitute,
)
from .nnet import TrainingConfig
from .oracle import TargetOracle
from .seeding import derive_seed
from .service import OracleClient, parse_address

log = logging.getLogger("mimicry")

STAGES = ("extract", "active", "evade", "poison")


class PipelineError(RuntimeError):
    """A pipeline stage failed; partial reports written so far are preserved."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentConfig:
    """Flat key = value configuration with CLI overrides; see config reference
    in the README for the key names."""

    corpus_file: str | None = None
    corpus_n: int = 8000
    corpus_vocab_size: int = 1000
    corpus_overlap: float = 0.6
    oracle_kind: str = "naive_bayes"
    calls_per_day: int = 1000
    feedback_rate_limited: bool = False
    feature_k: int = 800
    target_train: int = 2000
    test_size: int = 500
    extract_budget: int = 500
    initial_labels: int = 100
    active_rounds: int = 1
    active_draw: int = 500
    strategy_kind: str = "margin"
    strategy_margin: float = 0.25
    strategy_k: int = 0
    evasion_n: int = 100
    evasion_candidates: int = 1000
    evasion_objective: str = "average_error"
    poison_p: float = 10.0
    poison_pool: int = 1000
    poison_eval: int = 1000
    seed: int = 1
    out_dir: str = "runs/default"
    initial_training: TrainingConfig = field(default_factory=TrainingConfig.high_budget)
    refine_training: TrainingConfig = field(default_factory=TrainingConfig.low_budget)

    def strategy(self) -> SelectionStrategy:
        return SelectionStrategy(
            kind=self.strategy_kind, margin=self.strategy_margin, k=self.strategy_k
        )


# config-file key -> ExperimentConfig field
_KEY_MAP = {
    "corpus.file": "corpus_file",
    "corpus.n": "corpus_n",
    "corpus.vocab_size": "corpus_vocab_size",
    "corpus.overlap": "corpus_overlap",
    "oracle.kind": "oracle_kind",
    "oracle.calls_per_day": "calls_per_day",
    "oracle.feedback_rate_limited": "feedback_rate_limited",
    "features.k": "feature_k",
    "split.target_train": "target_train",
    "split.test_size": "test_size",
    "extract.budget": "extract_budget",
    "active.initial_labels": "initial_labels",
    "active.rounds": "active_rounds",
    "active.draw_per_round": "active_draw",
    "active.strategy": "strategy_kind",
    "active.margin": "strategy_margin",
    "active.k": "strategy_k",
    "evasion.n": "evasion_n",
    "evasion.candidates": "evasion_candidates",
    "evasion.objective": "evasion_objective",
    "poison.p": "poison_p",
    "poison.pool": "poison_pool",
    "poison.eval": "poison_eval",
    "seed": "seed",
    "out": "out_dir",
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_TRAINING_FIELDS = {f.name: f.type for f in fields(TrainingConfig)}


def _coerce(raw: str, type_name: str):
    raw = raw.strip()
    if type_name in ("int", "int | None"):
        return int(raw)
    if type_name == "float":
        return float(raw)
    if type_name == "bool":
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"expected true/false, got {raw!r}")
    return raw


def parse_config_text(text: str) -> dict:
    """Parse "key = value" lines (# comments, blank lines ignored) into overrides."""
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        overrides[key] = value
    return overrides


def apply_overrides(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    plain: dict = {}
    initial = dict()
    refine = dict()
    for key, raw in overrides.items():
        if key.startswith("initial."):
            name = key[len("initial.") :]
            if name not in _TRAINING_FIELDS:
                raise ValueError(f"unknown training field {key!r}")
            initial[name] = _coerce(str(raw), str(_TRAINING_FIELDS[name]))
        elif key.startswith("refine."):
            name = key[len("refine.") :]
            if name not in _TRAINING_FIELDS:
                raise ValueError(f"unknown training field {key!r}")
            refine[name] = _coerce(str(raw), str(_TRAINING_FIELDS[name]))
        elif key in _KEY_MAP:
            name = _KEY_MAP[key]
            value = raw if not isinstance(raw, str) else _coerce(raw, str(_FIELD_TYPES[name]))
            if name == "corpus_file" and value == "":
                value = None
            plain[name] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    config = replace(config, **plain)
    if initial:
        config = replace(config, initial_training=replace(config.initial_training, **initial))
    if refine:
        config = replace(config, refine_training=replace(config.refine_training, **refine))
    return config


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    config = ExperimentConfig()
    if path is not None:
        config = apply_overrides(config, parse_config_text(Path(path).read_text("utf-8")))
    if overrides:
        config = apply_overrides(config, overrides)
    return config


def config_text(config: ExperimentConfig) -> str:
    """Canonical echo of the resolved configuration, one key = value per line."""
    reverse = {v: k for k, v in _KEY_MAP.items()}
    lines = []
    for f in fields(ExperimentConfig):
        if f.name in ("initial_training", "refine_training"):
            continue
        value = getattr(config, f.name)
        lines.append(f"{reverse[f.name]} = {'' if value is None else value}")
    for prefix, training in (("initial", config.initial_training), ("refine", config.refine_training)):
        for tf in fields(TrainingConfig):
            lines.append(f"{prefix}.{tf.name} = {getattr(training, tf.name)}")
    return "\n".join(sorted(lines)) + "\n"


def prepare_environment(config: ExperimentConfig):
    """Corpus, deterministic splits, and the adversary's feature vocabulary.

    Shared by the pipeline and serve-oracle so a served target is identical to
    the in-process one for the same config and seed.
    """
    if config.corpus_file:
        corpus = load_corpus(config.corpus_file)
        if not corpus.is_labeled():
            raise ValueError("pipeline corpus file must be fully labeled")
    else:
        corpus = generate_corpus(
            config.corpus_n,
            config.corpus_vocab_size,
            config.corpus_overlap,
            derive_seed(config.seed, "corpus"),
        )
    n = len(corpus)
    if config.target_train + config.test_size >= n:
        raise ValueError("corpus too small for the requested target/test split")
    rng = np.random.default_rng(derive_seed(config.seed, "split"))
    order = rng.permutation(n)
    target_corpus = SampleSet([corpus.samples[i] for i in order[: config.target_train]], corpus.provenance)
    cut = config.target_train + config.test_size
    test_samples = [corpus.samples[i] for i in order[config.target_train : cut]]
    pool = [corpus.samples[i] for i in order[cut:]]
    vocab = build_vocabulary(SampleSet(pool, corpus.provenance), config.feature_k)
    return target_corpus, test_samples, pool, vocab


def build_oracle(config: ExperimentConfig, target_corpus: SampleSet) -> TargetOracle:
    return TargetOracle(
        target_corpus,
        kind=config.oracle_kind,
        seed=derive_seed(config.seed, "target"),
        calls_per_day=config.calls_per_day,
        feedback_rate_limited=config.feedback_rate_limited,
    )


def emit_table(rows) -> tuple[str, str]:
    """Paired active/benchmark rows as CSV text plus a human-readable table.

    Each row needs initial_samples, additional_samples, total_samples, and
    d1/d2 for both schemes; totals must be consistent (equal-budget pairing).
    """
    columns = [
        "initial_samples",
        "additional_samples",
        "total_samples",
        "d1_active",
        "d2_active",
        "d1_benchmark",
        "d2_benchmark",
    ]
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"row missing fields {missing}")
        if row["initial_samples"] + row["additional_samples"] != row["total_samples"]:
            raise ValueError("mismatched pairing: totals do not add up")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(
            [row[c] if c.startswith(("initial", "additional", "total")) else f"{row[c]:.6f}" for c in columns]
        )
    csv_text = buf.getvalue()

    header = (
        f"{'Initial':>8} {'Additional':>11} {'Total':>7} "
        f"{'d1 act':>8} {'d2 act':>8} {'d1 bench':>9} {'d2 bench':>9}"
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['initial_samples']:>8} {row['additional_samples']:>11} {row['total_samples']:>7} "
            f"{100 * row['d1_active']:>7.2f}% {100 * row['d2_active']:>7.2f}% "
            f"{100 * row['d1_benchmark']:>8.2f}% {100 * row['d2_benchmark']:>8.2f}%"
        )
    return csv_text, "\n".join(lines) + "\n"


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


@dataclass
class PipelineResult:
    out_dir: Path
    completed_stages: list[str]
    budgets: dict
    oracle_stats: dict


def run_pipeline(config: ExperimentConfig, oracle_addr: str | None = None, until: str | None = None) -> PipelineResult:
    """The full attack pipeline; `until` stops after the named stage.

    Writes the report bundle into config.out_dir as stages complete, so a
    failing stage still leaves everything before it on disk.
    """
    if until is not None and until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    wanted = STAGES[: STAGES.index(until) + 1] if until else STAGES

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_text(config), encoding="utf-8")

    stage = "corpus"
    budgets: dict[str, QueryBudget] = {}
    completed: list[str] = []
    client = None
    try:
        target_corpus, test_samples, pool, vocab = prepare_environment(config)
        vocab.save(out / "vocab.tsv")
        log.info("corpus ready: %d target / %d test / %d pool", len(target_corpus), len(test_samples), len(pool))

        stage = "target"
        if oracle_addr is None:
            oracle = build_oracle(config, target_corpus)
        else:
            oracle = client = OracleClient(*parse_address(oracle_addr))

        # disjoint pool slices, one master order
        need = {
            "extract": config.extract_budget,
            "active": config.active_draw * config.active_rounds,
            "evade": config.evasion_candidates,
            "poison_pool": config.poison_pool,
            "poison_eval": config.poison_eval,
        }
        if sum(need.values()) > len(pool):
            raise ValueError(f"pool of {len(pool)} too small for stage needs {need}")
        rng = np.random.default_rng(derive_seed(config.seed, "pool"))
        order = rng.permutation(len(pool))
        slices = {}
        start = 0
        for name, size in need.items():
            slices[name] = [pool[i] for i in order[start : start + size]]
            start += size

        stage = "evaluation"
        budgets["evaluation"] = QueryBudget(config.test_size)
        test_labeled = collect_labels(oracle, test_samples, budgets["evaluation"]).labeled

        stage = "extract"
        budgets["extraction"] = QueryBudget(config.extract_budget)
        collected = collect_labels(oracle, slices["extract"], budgets["extraction"])
        substitute, val_report = fit_substitute(
            collected.labeled,
            config.initial_training,
            vocab,
            split_seed=derive_seed(config.seed, "extract-split"),
        )
        test_report = divergence(test_labeled.labels(), substitute.predict_many(list(test_labeled)))
        extract_payload = extraction_report(
            val_report, budgets["extraction"], collected.days_advanced, config.initial_training, config.seed
        )
        extract_payload["test"] = test_report.to_dict()
        _write_json(out / "extraction_report.json", extract_payload)
        save_substitute(out / "substitute.json", substitute, config.initial_training)
        val_scores = substitute.scores(list(collected.labeled)[len(collected.labeled) // 2 :])
        figures.score_histogram(val_scores, substitute.threshold, out / "scores_hist.png")
        log.info("extraction: d_max=%.4f on validation, %.4f on test", val_report.d_max, test_report.d_max)
        completed.append("extract")

        table_rows = []
        refined = substitute
        if "active" in wanted:
            stage = "active"
            initial_labeled = SampleSet(
                list(collected.labeled)[: config.initial_labels], "generated"
            )
            initial_twin = run_active_learning(
                oracle,
                initial_labeled,
                slices["active"],
                rounds=0,
                draw_per_round=config.active_draw,
                strategy=config.strategy(),
                config=config.refine_training,
                budget=QueryBudget(0),
                seed=derive_seed(config.seed, "refine"),
                vocab=vocab,
                test_set=test_labeled,
            )[0]
            initial_d_max = divergence(
                test_labeled.labels(), initial_twin.predict_many(list(test_labeled))
            ).d_max

            budgets["active"] = QueryBudget(config.active_draw * config.active_rounds)
            refined, rounds = run_active_learning(
                oracle,
                initial_labeled,
                slices["active"],
                rounds=config.active_rounds,
                draw_per_round=config.active_draw,
                strategy=config.strategy(),
                config=config.refine_training,
                budget=budgets["active"],
                seed=derive_seed(config.seed, "refine"),
                vocab=vocab,
                test_set=test_labeled,
            )
            with open(out / "active_rounds.jsonl", "w", encoding="utf-8") as fh:
                for report in rounds:
                    fh.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")

            selected_total = sum(r.budget_consumed for r in rounds)
            budgets["benchmark"] = QueryBudget(selected_total)
            _, bench_report = run_random_benchmark(
                oracle,
                initial_labeled,
                slices["active"],
                selected_total,
                config=config.refine_training,
                budget=budgets["benchmark"],
                seed=derive_seed(config.seed, "refine"),
                vocab=vocab,
                test_set=test_labeled,
            )
            _write_json(out / "benchmark_report.json", bench_report.to_dict())

            active_div = rounds[-1].divergence if rounds else None
            if active_div is not None:
                table_rows.append(
                    {
                        "initial_samples": config.initial_labels,
                        "additional_samples": selected_total,
                        "total_samples": config.initial_labels + selected_total,
                        "d1_active": active_div.d1,
                        "d2_active": active_div.d2,
                        "d1_benchmark": bench_report.divergence.d1,
                        "d2_benchmark": bench_report.divergence.d2,
                    }
                )
                csv_text, table_text = emit_table(table_rows)
                (out / "active_vs_benchmark.csv").write_text(csv_text, encoding="utf-8")
                figures.active_comparison(table_rows, initial_d_max, out / "active_vs_benchmark.png")
                log.info(
                    "active: d_max %.4f vs benchmark %.4f at %d total labels",
                    active_div.d_max,
                    bench_report.divergence.d_max,
                    config.initial_labels + selected_total,
                )
            completed.append("active")

        evasion_payload = None
        if "evade" in wanted:
            stage = "evade"
            selection = select_evasion(
                refined, slices["evade"], config.evasion_n, config.evasion_objective
            )
            rng_e = np.random.default_rng(derive_seed(config.seed, "evasion-baseline"))
            baseline = [
                slices["evade"][i]
                for i in sorted(rng_e.choice(len(slices["evade"]), config.evasion_n, replace=False))
            ]
            budgets["evasion"] = QueryBudget(len(selection.samples) + len(baseline))
            selected_labels = collect_labels(oracle, selection.samples, budgets["evasion"]).labeled
            baseline_labels = collect_labels(oracle, baseline, budgets["evasion"]).labeled
            evasion_payload = {
                "objective": config.evasion_objective,
                "n": config.evasion_n,
                "short": selection.short,
            }
            if all(s.label is not None for s in selection.samples + baseline):
                sel_truth = [s.label for s in selection.samples]
                base_truth = [s.label for s in baseline]
                evasion_payload["selected_error_rate"] = float(
                    np.mean(np.asarray(sel_truth) != np.asarray(selected_labels.labels()))
                )
                evasion_payload["baseline_error_rate"] = float(
                    np.mean(np.asarray(base_truth) != np.asarray(baseline_labels.labels()))
                )
            else:
                evasion_payload["note"] = "no ground-truth labels; error rates unavailable"
            _write_json(out / "evasion_report.json", evasion_payload)
            log.info("evasion: %s", evasion_payload)
            completed.append("evade")

        poison_payload = None
        if "poison" in wanted:
            stage = "poison"
            plan = plan_poison(refined, slices["poison_pool"], config.poison_p)
            _write_json(out / "poison_plan.json", plan.to_dict())
            budgets["causative"] = QueryBudget(2 * config.poison_eval)
            poison_report = run_causative(oracle, plan, slices["poison_eval"], budgets["causative"])
            poison_payload = poison_report.to_dict()
            _write_json(out / "poison_report.json", poison_payload)
            figures.poison_impact(poison_payload, out / "poison_impact.png")
            log.info("poison: d_avg=%.4f with %d flips", poison_payload["d_avg"], poison_payload["plan_size"])
            completed.append("poison")

        stage = "report"
        stats = oracle.stats()
        consumed = {name: b.consumed for name, b in budgets.items()}
        if stats["total_calls"] != sum(consumed.values()):
            raise RuntimeError(
                f"budget ledger mismatch: oracle served {stats['total_calls']} calls, "
                f"budgets account for {sum(consumed.values())}"
            )
        _write_json(out / "oracle_stats.json", {"stats": stats, "budgets": consumed})

        summary = [
            "mimicry pipeline summary",
            f"seed {config.seed}, oracle kind {config.oracle_kind}, quota {config.calls_per_day}/day",
            f"stages completed: {', '.join(completed)}",
            "",
            f"extraction ({config.extract_budget} labels): "
            f"d_max {100 * val_report.d_max:.2f}% validation, {100 * test_report.d_max:.2f}% test",
        ]
        if table_rows:
            _, table_text = emit_table(table_rows)
            summary += ["", "active learning vs benchmark:", table_text.rstrip()]
        if evasion_payload and "selected_error_rate" in evasion_payload:
            summary += [
                "",
                f"evasion: target error {100 * evasion_payload['selected_error_rate']:.2f}% on "
                f"near-threshold picks vs {100 * evasion_payload['baseline_error_rate']:.2f}% on random",
            ]
        if poison_payload:
            summary += [
                "",
                f"poisoning (p={config.poison_p:g}%, {poison_payload['plan_size']} flips): "
                f"d1 {100 * poison_payload['d1']:.2f}%, d2 {100 * poison_payload['d2']:.2f}%, "
                f"overall {100 * poison_payload['d_avg']:.2f}%",
            ]
        summary += [
            "",
            f"oracle calls: {stats['total_calls']} over {stats['day'] + 1} simulated day(s)",
        ]
        (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
        return PipelineResult(out, completed, consumed, stats)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, exc) from exc
    finally:
        if client is not None:
            client.close()
