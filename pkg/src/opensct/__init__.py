"""Evaluation and data-curation toolkit for open-vocabulary state tracking.

Parses templated state-change sentences, scores prediction sets against
gold sets under the original greedy metric and the cluster-based metric
with pluggable similarity backends, validates clusterings with BCubed, and
runs the three-stage vote-filtering pipeline with dataset statistics.
"""

from .clustering import BCubedReport, ClusterPartition, bcubed, cluster
from .core import (PredictionRecord, Procedure, StateChange, StepRecord, load_dataset,
                   load_predictions, save_dataset)
from .errors import (ConfigurationError, ProtocolError, TemplateParseError, ToolkitError,
                     TransportError, ValidationError)
from .metrics import (Assignment, EvalConfig, MetricReport, StepScore, cluster_metric,
                      evaluate_corpus, greedy_metric, max_weight_assignment)
from .pipeline import (DatasetStats, FilterReport, ProcedureVotes, StepVotes, apply_filters,
                       compute_agreement, compute_stats, load_votes, rule_filter,
                       stage1_filter, stage2_filter, stage3_filter)
from .similarity import (EmbeddingCache, LexicalFallbackProvider, RemoteEmbeddingProvider,
                         SimilarityScorer, bleu_score, bleu_scorer, embedding_score,
                         embedding_scorer, exact_score, exact_scorer, resolve_provider,
                         rouge_score, rouge_scorer)
from .template import TemplatedSentence, canonicalize, parse, render

__version__ = "0.1.0"

__all__ = [
    "Assignment", "BCubedReport", "ClusterPartition", "ConfigurationError", "DatasetStats",
    "EmbeddingCache", "EvalConfig", "FilterReport", "LexicalFallbackProvider", "MetricReport",
    "PredictionRecord", "Procedure", "ProcedureVotes", "ProtocolError", "RemoteEmbeddingProvider",
    "SimilarityScorer", "StateChange", "StepRecord", "StepScore", "StepVotes",
    "TemplateParseError", "TemplatedSentence", "ToolkitError", "TransportError", "ValidationError",
    "apply_filters", "bcubed", "bleu_score", "bleu_scorer", "canonicalize", "cluster",
    "cluster_metric", "compute_agreement", "compute_stats", "embedding_score", "embedding_scorer",
    "evaluate_corpus", "exact_score", "exact_scorer", "greedy_metric", "load_dataset",
    "load_predictions", "load_votes", "max_weight_assignment", "parse", "render",
    "resolve_provider", "rouge_score", "rouge_scorer", "rule_filter", "save_dataset",
    "stage1_filter", "stage2_filter", "stage3_filter",
]
