"""Full evaluation flow: write files, validate them, score them via the CLI.

Builds a tiny dataset and a deliberately repetitive prediction file on disk,
then drives the same entry point the `opensct` command uses. Compare the
"original" and "cluster" rows: the repeated prediction only helps the
original metric.

Run: python3 demos/end_to_end_evaluation.py
"""

import json
import sys
import tempfile
from pathlib import Path

from opensct.cli import run

DATASET = [
    {"id": "fry-egg", "goal": "Fry an egg", "steps": [
        {"text": "Heat the pan", "state_changes": [
            "temperature of pan was cold before and hot afterwards"]},
        {"text": "Crack the egg", "state_changes": [
            {"entity": "egg", "attribute": "shell", "before": "intact", "after": "cracked"},
            {"entity": "pan", "attribute": "content", "before": "empty", "after": "egg"}]},
        {"text": "Wait and serve", "state_changes": [
            "state of egg was raw before and cooked afterwards"]},
    ]},
]

PREDICTIONS = [
    {"procedure_id": "fry-egg", "step_index": 0, "predictions": [
        "temperature of pan was cold before and hot afterwards"]},
    {"procedure_id": "fry-egg", "step_index": 1, "predictions": [
        {"entity": "egg", "attribute": "shell", "before": "intact", "after": "cracked"},
        # the model repeats itself; greedy scoring rewards this
        {"entity": "egg", "attribute": "shell", "before": "intact", "after": "cracked"},
        {"entity": "stove", "attribute": "knob", "before": "off", "after": "on"}]},
    {"procedure_id": "fry-egg", "step_index": 2, "predictions": [
        "state of egg was raw before and fried afterwards"]},
]


def main():
    workdir = Path(tempfile.mkdtemp(prefix="opensct-demo-"))
    dataset_path = workdir / "dataset.jsonl"
    preds_path = workdir / "predictions.jsonl"
    report_path = workdir / "report.json"
    dataset_path.write_text("".join(json.dumps(r) + "\n" for r in DATASET), encoding="utf-8")
    preds_path.write_text("".join(json.dumps(r) + "\n" for r in PREDICTIONS), encoding="utf-8")

    print("$ opensct validate --dataset dataset.jsonl")
    code = run(["validate", "--dataset", str(dataset_path)])
    assert code == 0

    print("\n$ opensct evaluate --dataset dataset.jsonl --predictions predictions.jsonl "
          "--format tsv --per-step")
    code = run(["evaluate", "--dataset", str(dataset_path), "--predictions", str(preds_path),
                "--format", "tsv", "--per-step"])
    assert code == 0

    print("\n$ opensct evaluate ... --out report.json  (full-precision JSON)")
    code = run(["evaluate", "--dataset", str(dataset_path), "--predictions", str(preds_path),
                "--out", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text(encoding="utf-8"))
    original = report["scores"]["original"]["exact"]["f1"]
    clustered = report["scores"]["cluster"]["exact"]["f1"]
    print(f"\nexact-match corpus F1: original={original:.4f} cluster-based={clustered:.4f}")
    print(f"(report written to {report_path})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
