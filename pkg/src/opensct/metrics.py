"""Step-level and corpus-level matching metrics.

Two metric families over (prediction set, gold set) pairs of state changes:

* original greedy metric: every item is scored against its best-matching
  counterpart, so several predictions may claim the same gold item and
  repetition inflates precision;
* cluster-based metric: both sides are threshold-clustered, clusters are
  assigned one-to-one by maximum total weight, and precision/recall are the
  assignment weight over the number of predicted/gold clusters, so exact
  repetition collapses into a cluster and stops counting twice.

Empty-set conventions (both families): both sides empty scores 1/1/1, one
side empty scores 0/0/0.

Scoring operates on canonical templated sentences; StateChange inputs are
rendered first, plain strings pass through untouched.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import ClusterPartition, cluster
from .core import PredictionRecord, Procedure, StateChange
from .errors import ConfigurationError, ValidationError
from .similarity import LexicalFallbackProvider, SimilarityScorer, embedding_scorer, make_match_scorer
from .template import render

FAMILIES = ("original", "cluster")
WEIGHT_MODES = ("mean", "max")
AVERAGE_MODES = ("step", "procedure")


@dataclass(frozen=True)
class StepScore:
    """Precision/recall/F1 for one step under one family and one match scorer."""

    precision: float
    recall: float
    f1: float
    metric_family: str
    similarity_name: str

    @classmethod
    def from_pr(cls, precision: float, recall: float, family: str, similarity: str) -> "StepScore":
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1,
                   metric_family=family, similarity_name=similarity)


@dataclass(frozen=True)
class Assignment:
    """A one-to-one pairing of predicted-cluster and gold-cluster indices."""

    pairs: tuple[tuple[int, int], ...]
    total_weight: float


def _sentences(changes: Sequence[StateChange | str]) -> list[str]:
    return [c if isinstance(c, str) else render(c).canonical for c in changes]


def greedy_metric(preds: Sequence[StateChange | str], golds: Sequence[StateChange | str],
                  scorer: SimilarityScorer) -> StepScore:
    """Original best-match metric; many-to-one matching is intentionally allowed.

    Precision scores each prediction as candidate against its best gold
    reference; recall scores each gold as candidate against its best
    prediction. No similarity threshold is applied.
    """
    if not preds and not golds:
        return StepScore(1.0, 1.0, 1.0, "original", scorer.name)
    if not preds or not golds:
        return StepScore(0.0, 0.0, 0.0, "original", scorer.name)
    pred_sents = _sentences(preds)
    gold_sents = _sentences(golds)
    precision = fmean(max(scorer(p, g) for g in gold_sents) for p in pred_sents)
    recall = fmean(max(scorer(g, p) for p in pred_sents) for g in gold_sents)
    return StepScore.from_pr(precision, recall, "original", scorer.name)


def max_weight_assignment(weights) -> Assignment:
    """Maximum-total-weight one-to-one assignment of a non-negative m x n matrix.

    Returns exactly min(m, n) pairs (rectangular Hungarian via scipy).
    """
    matrix = np.asarray(weights, dtype=np.float64)
    if matrix.size == 0:
        return Assignment(pairs=(), total_weight=0.0)
    if matrix.ndim != 2:
        raise ValidationError(f"weight matrix must be 2-dimensional, got shape {matrix.shape}")
    if np.any(np.isnan(matrix)):
        raise ValidationError("weight matrix contains NaN")
    if np.any(matrix < 0):
        raise ValidationError("weight matrix contains negative entries")
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    pairs = tuple(sorted((int(r), int(c)) for r, c in zip(rows, cols)))
    total = float(matrix[rows, cols].sum())
    return Assignment(pairs=pairs, total_weight=total)


def _distinct_members(partition: ClusterPartition) -> list[list[str]]:
    # exact duplicates inside a cluster collapse: the cluster is a set of sentences
    return [list(dict.fromkeys(partition.member_sentences(k))) for k in range(len(partition))]


def _cluster_weights(pred_groups: list[list[str]], gold_groups: list[list[str]],
                     match_scorer: SimilarityScorer, weight_mode: str) -> np.ndarray:
    matrix = np.zeros((len(pred_groups), len(gold_groups)), dtype=np.float64)
    for i, pred_group in enumerate(pred_groups):
        for j, gold_group in enumerate(gold_groups):
            scores = [match_scorer(p, g) for p in pred_group for g in gold_group]
            matrix[i, j] = max(scores) if weight_mode == "max" else fmean(scores)
    return matrix


def _cluster_score(pred_part: ClusterPartition | None, gold_part: ClusterPartition | None,
                   match_scorer: SimilarityScorer, weight_mode: str) -> StepScore:
    if pred_part is None and gold_part is None:
        return StepScore(1.0, 1.0, 1.0, "cluster", match_scorer.name)
    if pred_part is None or gold_part is None:
        return StepScore(0.0, 0.0, 0.0, "cluster", match_scorer.name)
    pred_groups = _distinct_members(pred_part)
    gold_groups = _distinct_members(gold_part)
    weights = _cluster_weights(pred_groups, gold_groups, match_scorer, weight_mode)
    assignment = max_weight_assignment(weights)
    precision = assignment.total_weight / len(pred_groups)
    recall = assignment.total_weight / len(gold_groups)
    return StepScore.from_pr(precision, recall, "cluster", match_scorer.name)


def cluster_metric(preds: Sequence[StateChange | str], golds: Sequence[StateChange | str],
                   embed_scorer: SimilarityScorer, match_scorer: SimilarityScorer,
                   th: float, weight_mode: str = "mean") -> StepScore:
    """Cluster both sides, assign clusters one-to-one, and score the assignment.

    The weight of a (predicted cluster, gold cluster) pair is the mean (or,
    with weight_mode="max", the maximum) of match_scorer(prediction, gold)
    over all pairs of *distinct* member sentences; precision divides the
    assignment's total weight by the number of predicted clusters, recall by
    the number of gold clusters.
    """
    if weight_mode not in WEIGHT_MODES:
        raise ConfigurationError(f"weight_mode must be one of {WEIGHT_MODES}, got {weight_mode!r}")
    pred_part = cluster(_sentences(preds), embed_scorer, th) if preds else None
    gold_part = cluster(_sentences(golds), embed_scorer, th) if golds else None
    return _cluster_score(pred_part, gold_part, match_scorer, weight_mode)


# -- corpus evaluation --

@dataclass
class EvalConfig:
    """Knobs for evaluate_corpus; defaults mirror the documented CLI defaults."""

    threshold: float = 0.7
    match_scorers: tuple[str, ...] = ("exact", "bleu", "rouge")
    embed_scorer: SimilarityScorer | None = None
    embedding_label: str | None = None
    cluster_weight: str = "mean"
    average: str = "step"
    workers: int = 1
    per_step: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold < 1.0:
            raise ConfigurationError(f"threshold must lie in [0, 1), got {self.threshold}")
        if not self.match_scorers:
            raise ConfigurationError("at least one match scorer is required")
        if self.cluster_weight not in WEIGHT_MODES:
            raise ConfigurationError(f"cluster_weight must be one of {WEIGHT_MODES}")
        if self.average not in AVERAGE_MODES:
            raise ConfigurationError(f"average must be one of {AVERAGE_MODES}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


@dataclass
class MetricReport:
    """Corpus-level report: macro averages, counts and optional per-step scores.

    JSON output carries full-precision fractions; percent formatting is done
    only in the TSV rendering. Serialization is deterministic for identical
    inputs and configuration, independent of worker count.
    """

    config: dict
    counts: dict
    scores: dict
    warnings: list[str] = field(default_factory=list)
    per_step: list[dict] | None = None

    def to_dict(self) -> dict:
        out = {
            "config": self.config,
            "counts": self.counts,
            "scores": self.scores,
            "warnings": self.warnings,
        }
        if self.per_step is not None:
            out["per_step"] = self.per_step
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_tsv(self) -> str:
        lines = ["scope\tprocedure_id\tstep_index\tfamily\tscorer\tprecision\trecall\tf1"]
        for family in FAMILIES:
            for name in self.config["match_scorers"]:
                cell = self.scores[family][name]
                lines.append(
                    "corpus\t\t\t%s\t%s\t%s\t%s\t%s"
                    % (family, name, _pct(cell["precision"]), _pct(cell["recall"]), _pct(cell["f1"]))
                )
        if self.per_step is not None:
            for row in self.per_step:
                for family in FAMILIES:
                    for name in self.config["match_scorers"]:
                        cell = row["scores"][family][name]
                        lines.append(
                            "step\t%s\t%d\t%s\t%s\t%s\t%s\t%s"
                            % (row["procedure_id"], row["step_index"], family, name,
                               _pct(cell["precision"]), _pct(cell["recall"]), _pct(cell["f1"]))
                        )
        return "\n".join(lines) + "\n"


def _pct(fraction: float) -> str:
    return f"{fraction * 100:.2f}"


def _step_cells(preds: Sequence[StateChange], golds: Sequence[StateChange],
                match_scorers: Mapping[str, SimilarityScorer], embed_scorer: SimilarityScorer,
                th: float, weight_mode: str) -> tuple[dict, int, int]:
    pred_sents = _sentences(preds)
    gold_sents = _sentences(golds)
    pred_part = cluster(pred_sents, embed_scorer, th) if pred_sents else None
    gold_part = cluster(gold_sents, embed_scorer, th) if gold_sents else None
    cells: dict = {"original": {}, "cluster": {}}
    for name, scorer in match_scorers.items():
        original = greedy_metric(pred_sents, gold_sents, scorer)
        clustered = _cluster_score(pred_part, gold_part, scorer, weight_mode)
        cells["original"][name] = original
        cells["cluster"][name] = clustered
    n_pred_clusters = len(pred_part) if pred_part is not None else 0
    n_gold_clusters = len(gold_part) if gold_part is not None else 0
    return cells, n_pred_clusters, n_gold_clusters


def _score_dict(score: StepScore) -> dict:
    return {"precision": score.precision, "recall": score.recall, "f1": score.f1}


def evaluate_corpus(dataset: Sequence[Procedure], predictions: Sequence[PredictionRecord],
                    config: EvalConfig | None = None) -> MetricReport:
    """Evaluate every dataset step under both metric families and all match scorers.

    Steps without a prediction record are scored against an empty prediction
    set and listed in the report's warnings. Per-step evaluation may run on
    ``config.workers`` threads; aggregation always happens in (procedure id,
    step index) order so parallel and serial runs emit identical reports.
    """
    config = config or EvalConfig()
    embed_scorer = config.embed_scorer
    embedding_label = config.embedding_label
    if embed_scorer is None:
        provider = LexicalFallbackProvider()
        embed_scorer = embedding_scorer(provider)
        embedding_label = embedding_label or provider.model
    embedding_label = embedding_label or embed_scorer.name
    match_scorers = {name: make_match_scorer(name) for name in config.match_scorers}

    by_key = {(rec.procedure_id, rec.step_index): rec for rec in predictions}
    tasks = []  # (pid, idx, preds, golds, missing)
    for proc in dataset:
        for idx, step in enumerate(proc.steps):
            record = by_key.get((proc.id, idx))
            preds = record.predictions if record is not None else ()
            tasks.append((proc.id, idx, preds, step.gold_changes, record is None))

    def run(task):
        pid, idx, preds, golds, missing = task
        cells, n_pred_clusters, n_gold_clusters = _step_cells(
            preds, golds, match_scorers, embed_scorer, config.threshold, config.cluster_weight
        )
        return pid, idx, cells, n_pred_clusters, n_gold_clusters, len(preds), len(golds), missing

    if config.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(task) for task in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    warnings = [
        f"no prediction record for procedure {pid!r} step {idx}; scored as empty"
        for pid, idx, _, _, _, _, _, missing in results if missing
    ]
    counts = {
        "procedures": len(dataset),
        "steps": len(results),
        "predictions": sum(r[5] for r in results),
        "gold_changes": sum(r[6] for r in results),
        "predicted_clusters": sum(r[3] for r in results),
        "gold_clusters": sum(r[4] for r in results),
    }

    scores: dict = {}
    for family in FAMILIES:
        scores[family] = {}
        for name in config.match_scorers:
            per_step_scores = [r[2][family][name] for r in results]
            if config.average == "procedure":
                groups: dict[str, list[StepScore]] = {}
                for (pid, _, cells, *_), score in zip(results, per_step_scores):
                    groups.setdefault(pid, []).append(score)
                ordered = [groups[pid] for pid in sorted(groups)]
                precision = fmean(fmean(s.precision for s in g) for g in ordered) if ordered else 1.0
                recall = fmean(fmean(s.recall for s in g) for g in ordered) if ordered else 1.0
                f1 = fmean(fmean(s.f1 for s in g) for g in ordered) if ordered else 1.0
            else:
                precision = fmean(s.precision for s in per_step_scores) if per_step_scores else 1.0
                recall = fmean(s.recall for s in per_step_scores) if per_step_scores else 1.0
                f1 = fmean(s.f1 for s in per_step_scores) if per_step_scores else 1.0
            scores[family][name] = {"precision": precision, "recall": recall, "f1": f1}

    per_step = None
    if config.per_step:
        per_step = [
            {
                "procedure_id": pid,
                "step_index": idx,
                "scores": {
                    family: {name: _score_dict(cells[family][name]) for name in config.match_scorers}
                    for family in FAMILIES
                },
            }
            for pid, idx, cells, *_ in results
        ]

    report_config = {
        "threshold": config.threshold,
        "match_scorers": list(config.match_scorers),
        "embedding": embedding_label,
        "cluster_weight": config.cluster_weight,
        "average": config.average,
    }
    return MetricReport(config=report_config, counts=counts, scores=scores,
                        warnings=warnings, per_step=per_step)
