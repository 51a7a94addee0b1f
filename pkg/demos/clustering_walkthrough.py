"""Walk through the greedy threshold clustering scan, step by step.

Each sentence is placed into the first existing cluster whose every member
scores strictly above the threshold against it, otherwise it opens a new
cluster. Near-duplicate templated sentences share most of their tokens, so
the offline hashed-unigram embeddings are enough to see the grouping.

Run: python3 demos/clustering_walkthrough.py
"""

from opensct import bcubed, cluster, embedding_scorer
from opensct.clustering import ClusterPartition

SENTENCES = [
    "location of spray bottle was shelf before and hand afterwards",
    "location of the spray bottle was shelf before and hand afterwards",
    "temperature of oven was cold before and hot afterwards",
    "temperature of the oven was cold before and hot afterwards",
    "shape of potato was whole before and cut in half afterwards",
]


def main():
    scorer = embedding_scorer()
    threshold = 0.7

    print(f"clustering {len(SENTENCES)} sentences at threshold {threshold}:\n")
    partition = cluster(SENTENCES, scorer, threshold)
    for k, members in enumerate(partition.clusters):
        print(f"cluster {k}:")
        for i in members:
            print(f"    [{i}] {partition.items[i]}")
    print("\npairwise similarities that decided the scan:")
    for i in range(len(SENTENCES)):
        for j in range(i + 1, len(SENTENCES)):
            score = scorer(SENTENCES[i], SENTENCES[j])
            marker = ">" if score > threshold else "<="
            print(f"    S({i},{j}) = {score:.3f} {marker} {threshold}")

    reference = ClusterPartition(items=tuple(SENTENCES), clusters=((0, 1), (2, 3), (4,)))
    report = bcubed(partition, reference)
    print(f"\nBCubed against the intended grouping: "
          f"P={report.precision:.2f} R={report.recall:.2f} F1={report.f1:.2f}")


if __name__ == "__main__":
    main()
