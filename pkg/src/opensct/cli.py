"""Unified command-line surface: evaluate | cluster | filter | stats | validate.

Exit codes: 0 on success, 1 on validation/parse/usage errors, 2 on
embedding-service transport or protocol errors. Reports are written to the
file named by --out or to stdout; notices and error details go to stderr so
report bytes stay reproducible. The embedding endpoint resolves flag first,
then $OPENSCT_EMBED_URL, then the offline lexical fallback (with a notice).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import pipeline
from .clustering import cluster
from .core import load_dataset, load_predictions, save_dataset, scan_dataset
from .errors import ToolkitError, ValidationError
from .metrics import AVERAGE_MODES, EvalConfig, WEIGHT_MODES, evaluate_corpus
from .similarity import (MATCH_SCORERS, EMBED_URL_ENV, embedding_scorer, exact_scorer,
                         resolve_provider)


class _UsageError(ToolkitError):
    """Bad flags or arguments; exits 1 (exit 2 is reserved for transport faults)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise _UsageError(f"{self.prog}: {message}")


def _notice(message: str) -> None:
    print(f"note: {message}", file=sys.stderr)


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _split_csv(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def build_parser() -> _Parser:
    parser = _Parser(prog="opensct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    evaluate = sub.add_parser("evaluate",
                              help="score predictions against a dataset under both metric families")
    evaluate.add_argument("--dataset", required=True, help="canonical dataset JSONL")
    evaluate.add_argument("--predictions", required=True, help="prediction JSONL")
    evaluate.add_argument("--threshold", type=float, default=0.7,
                          help="clustering similarity threshold in [0, 1) (default 0.7)")
    evaluate.add_argument("--scorers", default="exact,bleu,rouge",
                          help="comma-separated match scorers (default exact,bleu,rouge)")
    evaluate.add_argument("--embedding-endpoint", default=None,
                          help=f"embedding service base URL (default ${EMBED_URL_ENV}, else lexical fallback)")
    evaluate.add_argument("--format", choices=("json", "tsv"), default="json",
                          help="report format (default json)")
    evaluate.add_argument("--per-step", action="store_true", help="include per-step scores in the report")
    evaluate.add_argument("--out", default=None, help="write the report to this file instead of stdout")
    evaluate.add_argument("--workers", type=int, default=1,
                          help="worker threads for per-step evaluation (default 1)")
    evaluate.add_argument("--average", choices=AVERAGE_MODES, default="step",
                          help="macro-average unit (default step)")
    evaluate.add_argument("--cluster-weight", choices=WEIGHT_MODES, default="mean",
                          help="cluster-pair weight aggregation (default mean)")

    cluster_cmd = sub.add_parser("cluster",
                                 help="threshold-cluster a sentence list")
    cluster_cmd.add_argument("input", help="sentence file: one per line, or JSONL strings/objects with 'text'")
    cluster_cmd.add_argument("--threshold", type=float, default=0.7,
                             help="similarity threshold in [0, 1) (default 0.7)")
    cluster_cmd.add_argument("--scorer", choices=("embedding", "exact"), default="embedding",
                             help="similarity used for clustering (default embedding)")
    cluster_cmd.add_argument("--embedding-endpoint", default=None,
                             help=f"embedding service base URL (default ${EMBED_URL_ENV}, else lexical fallback)")
    cluster_cmd.add_argument("--out", default=None, help="write the JSON result to this file instead of stdout")

    filter_cmd = sub.add_parser("filter",
                                help="run the vote-based cleaning stages over a dataset")
    filter_cmd.add_argument("--dataset", required=True, help="canonical dataset JSONL")
    filter_cmd.add_argument("--votes", default=None, help="vote JSONL aligned with the dataset")
    filter_cmd.add_argument("--stages", default="1,2,3,rules",
                            help="comma-separated stages to run, in order (default 1,2,3,rules)")
    filter_cmd.add_argument("--out", required=True, help="write the filtered dataset JSONL here")
    filter_cmd.add_argument("--report", default=None, help="write per-stage removal report JSON here")

    stats_cmd = sub.add_parser("stats",
                               help="count procedures, steps and state changes")
    stats_cmd.add_argument("--dataset", required=True,
                           help="dataset JSONL file, or a directory holding <split>.jsonl files")
    stats_cmd.add_argument("--splits", default="train,dev,test",
                           help="split names to read from a dataset directory (default train,dev,test)")
    stats_cmd.add_argument("--format", choices=("json", "tsv"), default="json",
                           help="output format (default json)")
    stats_cmd.add_argument("--out", default=None, help="write to this file instead of stdout")

    validate_cmd = sub.add_parser("validate",
                                  help="check files against the canonical schemas")
    validate_cmd.add_argument("--dataset", required=True, help="canonical dataset JSONL")
    validate_cmd.add_argument("--predictions", default=None, help="prediction JSONL to check against the dataset")
    validate_cmd.add_argument("--votes", default=None, help="vote JSONL to check against the dataset")
    return parser


def _embedding(args) -> tuple:
    provider = resolve_provider(args.embedding_endpoint, notice=_notice)
    return embedding_scorer(provider), provider.model


def _cmd_evaluate(args) -> int:
    dataset = load_dataset(args.dataset)
    predictions = load_predictions(args.predictions, dataset)
    embed_scorer, label = _embedding(args)
    config = EvalConfig(
        threshold=args.threshold,
        match_scorers=tuple(_split_csv(args.scorers)),
        embed_scorer=embed_scorer,
        embedding_label=label,
        cluster_weight=args.cluster_weight,
        average=args.average,
        workers=args.workers,
        per_step=args.per_step,
    )
    for name in config.match_scorers:
        if name not in MATCH_SCORERS:
            raise _UsageError(f"unknown scorer {name!r}; choose from {sorted(MATCH_SCORERS)}")
    report = evaluate_corpus(dataset, predictions, config)
    _emit(report.to_json() if args.format == "json" else report.to_tsv(), args.out)
    return 0


def _read_sentences(path: str) -> list[str]:
    sentences: list[str] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("{") or text.startswith('"'):
            try:
                obj = json.loads(text)
            except json.JSONDecodeError:
                obj = text
            if isinstance(obj, dict):
                if "text" not in obj or not isinstance(obj["text"], str):
                    raise ValidationError(f"{path}:{line_no}: JSONL object has no string 'text' field")
                sentences.append(obj["text"])
            elif isinstance(obj, str):
                sentences.append(obj)
            else:
                raise ValidationError(f"{path}:{line_no}: unsupported JSONL entry of type {type(obj).__name__}")
        else:
            sentences.append(text)
    return sentences


def _cmd_cluster(args) -> int:
    sentences = _read_sentences(args.input)
    if args.scorer == "exact":
        scorer = exact_scorer()
    else:
        scorer, _ = _embedding(args)
    partition = cluster(sentences, scorer, args.threshold)
    payload = {"clusters": [list(members) for members in partition.clusters],
               "sizes": partition.sizes()}
    _emit(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_filter(args) -> int:
    dataset = load_dataset(args.dataset)
    stages = _split_csv(args.stages)
    votes = None
    if args.votes:
        votes = pipeline.load_votes(args.votes, dataset)
    filtered, reports = pipeline.apply_filters(dataset, votes, stages)
    empty = [proc.id for proc in filtered if not proc.steps]
    if empty:
        _notice(f"{len(empty)} procedures have zero steps after stages {stages} "
                f"(e.g. {empty[0]!r}); strict reloading will reject them until the 'rules' stage runs")
    save_dataset(filtered, args.out)
    if args.report:
        before = pipeline.compute_stats({"input": dataset}).to_dict()["splits"]["input"]
        after = pipeline.compute_stats({"output": filtered}).to_dict()["splits"]["output"]
        payload = {"stages": [r.to_dict() for r in reports], "input": before, "output": after}
        Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {len(filtered)} procedures to {args.out}", file=sys.stderr)
    return 0


def _cmd_stats(args) -> int:
    root = Path(args.dataset)
    if root.is_dir():
        splits = {}
        for name in _split_csv(args.splits):
            split_path = root / f"{name}.jsonl"
            if not split_path.exists():
                raise ValidationError(f"split file not found: {split_path}")
            splits[name] = load_dataset(split_path)
    else:
        splits = {root.stem: load_dataset(root)}
    stats = pipeline.compute_stats(splits)
    if args.format == "json":
        _emit(json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    else:
        lines = ["split\tprocedures\tsteps\tstate_changes"]
        for name, s in stats.splits:
            lines.append(f"{name}\t{s.procedures}\t{s.steps}\t{s.state_changes}")
        totals = stats.totals
        lines.append(f"total\t{totals.procedures}\t{totals.steps}\t{totals.state_changes}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_validate(args) -> int:
    procedures, errors = scan_dataset(args.dataset)
    if args.predictions:
        if errors:
            errors.append(f"{args.predictions}: skipped (dataset has errors)")
        else:
            try:
                load_predictions(args.predictions, procedures)
            except ValidationError as exc:
                errors.extend(str(exc).splitlines())
    if args.votes:
        if errors:
            errors.append(f"{args.votes}: skipped (dataset has errors)")
        else:
            try:
                pipeline.load_votes(args.votes, procedures)
            except ValidationError as exc:
                errors.extend(str(exc).splitlines())
    if errors:
        for line in errors:
            print(line, file=sys.stderr)
        print(f"validation failed with {len(errors)} error(s)", file=sys.stderr)
        return 1
    n_steps = sum(len(p.steps) for p in procedures)
    n_changes = sum(len(s.gold_changes) for p in procedures for s in p.steps)
    print(f"ok: {len(procedures)} procedures, {n_steps} steps, {n_changes} state changes")
    return 0


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "cluster": _cmd_cluster,
    "filter": _cmd_filter,
    "stats": _cmd_stats,
    "validate": _cmd_validate,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, dispatch and map errors to exit codes (0/1/2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
