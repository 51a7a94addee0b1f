"""Greedy threshold clustering of sentence sets and BCubed validation.

``cluster`` scans items in input order and appends each to the first
existing cluster (in creation order) whose EVERY member scores strictly
above the threshold against it; otherwise the item opens a new singleton
cluster. The output is an ordered partition with a complete-linkage
guarantee. The scan order matters: permuting the input may change the
partition, which callers are expected to treat as part of the contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigurationError, ValidationError
from .similarity import SimilarityScorer


@dataclass(frozen=True)
class ClusterPartition:
    """An ordered partition of ``items``; clusters hold item indices in join order."""

    items: tuple[str, ...]
    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        covered = sorted(i for members in self.clusters for i in members)
        if covered != list(range(len(self.items))):
            raise ValidationError("clusters do not form a partition of the item indices")

    def __len__(self) -> int:
        return len(self.clusters)

    def labels(self) -> list[int]:
        """Cluster index for each item."""
        out = [0] * len(self.items)
        for label, members in enumerate(self.clusters):
            for i in members:
                out[i] = label
        return out

    def member_sentences(self, cluster_index: int) -> tuple[str, ...]:
        return tuple(self.items[i] for i in self.clusters[cluster_index])

    def sizes(self) -> list[int]:
        return [len(members) for members in self.clusters]

    def as_groupings(self) -> set[frozenset[int]]:
        """Order-insensitive view, for partition equality checks."""
        return {frozenset(members) for members in self.clusters}


def cluster(items: Sequence[str], scorer: SimilarityScorer, th: float) -> ClusterPartition:
    """Greedy complete-linkage threshold clustering over ``items`` in order.

    Requires a symmetric scorer and a threshold in [0, 1). Membership uses
    the strict comparison score > th.
    """
    if not scorer.symmetric:
        raise ConfigurationError(f"clustering requires a symmetric scorer, got {scorer.name!r}")
    if not 0.0 <= th < 1.0:
        raise ConfigurationError(f"clustering threshold must lie in [0, 1), got {th}")
    items = list(items)
    if scorer.warm is not None:
        scorer.warm(items)
    clusters: list[list[int]] = []
    for i, item in enumerate(items):
        placed = False
        for members in clusters:
            if all(scorer(item, items[j]) > th for j in members):
                members.append(i)
                placed = True
                break
        if not placed:
            clusters.append([i])
    return ClusterPartition(items=tuple(items), clusters=tuple(tuple(m) for m in clusters))


@dataclass(frozen=True)
class BCubedReport:
    precision: float
    recall: float
    f1: float


def bcubed(predicted: ClusterPartition, gold: ClusterPartition) -> BCubedReport:
    """Item-level BCubed scores of a predicted partition against a gold partition.

    Per item, precision is the fraction of its predicted cluster shared with
    its gold cluster and recall the converse; both are averaged over items.
    The two partitions must cover the same item list.
    """
    if predicted.items != gold.items:
        raise ValidationError("BCubed requires both partitions to cover the same item list")
    n = len(predicted.items)
    if n == 0:
        return BCubedReport(precision=1.0, recall=1.0, f1=1.0)
    predicted_sets = [frozenset(members) for members in predicted.clusters]
    gold_sets = [frozenset(members) for members in gold.clusters]
    predicted_of = predicted.labels()
    gold_of = gold.labels()
    precision_sum = 0.0
    recall_sum = 0.0
    for i in range(n):
        mine = predicted_sets[predicted_of[i]]
        truth = gold_sets[gold_of[i]]
        overlap = len(mine & truth)
        precision_sum += overlap / len(mine)
        recall_sum += overlap / len(truth)
    precision = precision_sum / n
    recall = recall_sum / n
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return BCubedReport(precision=precision, recall=recall, f1=f1)
