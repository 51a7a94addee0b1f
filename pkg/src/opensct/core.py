"""Domain model and canonical JSONL file schemas.

Dataset files hold one procedure per line::

    {"id": str, "goal": str,
     "steps": [{"text": str,
                "state_changes": [{"entity": str, "attribute": str,
                                   "before": str, "after": str} | str]}]}

Prediction files hold one step per line::

    {"procedure_id": str, "step_index": int, "predictions": [{...} | str]}

State changes may appear either as structured objects or as templated
sentences; in memory they are always structured. Text fields are kept
verbatim (no case folding) so that rendering stays faithful; similarity
scorers apply their own normalization. Unknown keys are ignored with a
logged warning. All file I/O is UTF-8. Loaded structures are immutable
and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ValidationError

logger = logging.getLogger(__name__)

_CHANGE_KEYS = ("entity", "attribute", "before", "after")


@dataclass(frozen=True)
class StateChange:
    """One (entity, attribute, before, after) tuple, the atomic unit of this task."""

    entity: str
    attribute: str
    before: str
    after: str

    def __post_init__(self) -> None:
        for name in _CHANGE_KEYS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value.strip():
                raise ValidationError(f"state change field {name!r} must be non-empty text, got {value!r}")
            if "\n" in value or "\r" in value:
                raise ValidationError(f"state change field {name!r} must not contain newlines: {value!r}")

    def to_dict(self) -> dict[str, str]:
        return {k: getattr(self, k) for k in _CHANGE_KEYS}

    @classmethod
    def from_dict(cls, obj: dict[str, Any], context: str = "") -> "StateChange":
        missing = [k for k in _CHANGE_KEYS if k not in obj]
        if missing:
            raise ValidationError(f"{context}state change object missing keys {missing}")
        _warn_unknown_keys(obj, _CHANGE_KEYS, context + "state change")
        return cls(**{k: obj[k] for k in _CHANGE_KEYS})


@dataclass(frozen=True)
class StepRecord:
    """One step sentence plus its gold state changes, in file order."""

    text: str
    gold_changes: tuple[StateChange, ...] = ()


@dataclass(frozen=True)
class Procedure:
    """A goal plus its ordered steps. ``id`` is unique within a dataset."""

    id: str
    goal: str
    steps: tuple[StepRecord, ...]


@dataclass(frozen=True)
class PredictionRecord:
    """Predicted state changes for one (procedure, step) pair."""

    procedure_id: str
    step_index: int
    predictions: tuple[StateChange, ...] = ()


def parse_change_entry(entry: Any, context: str = "") -> StateChange:
    """Build a StateChange from either a structured object or a templated sentence."""
    from .errors import TemplateParseError
    from .template import parse  # deferred: template depends on StateChange

    if isinstance(entry, str):
        try:
            return parse(entry)
        except TemplateParseError as exc:
            raise ValidationError(f"{context}template parse error ({exc.anchor!r} anchor): {exc}") from exc
    if isinstance(entry, dict):
        return StateChange.from_dict(entry, context)
    raise ValidationError(f"{context}state change must be an object or a templated string, got {type(entry).__name__}")


def _warn_unknown_keys(obj: dict[str, Any], known: Iterable[str], what: str) -> None:
    unknown = sorted(set(obj) - set(known))
    if unknown:
        logger.warning("ignoring unknown %s keys: %s", what, ", ".join(unknown))


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object) for every non-blank line of a JSONL file."""
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: not valid JSON: {exc.msg}") from exc


def _require(obj: dict[str, Any], key: str, kind: type, context: str) -> Any:
    if key not in obj:
        raise ValidationError(f"{context}: missing key {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ValidationError(f"{context}: key {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def procedure_from_obj(obj: Any, context: str = "procedure") -> Procedure:
    """Validate one dataset record and build a Procedure."""
    if not isinstance(obj, dict):
        raise ValidationError(f"{context}: record must be a JSON object")
    proc_id = _require(obj, "id", str, context)
    goal = _require(obj, "goal", str, context)
    if not goal.strip():
        raise ValidationError(f"{context}: goal must be non-empty")
    steps_obj = _require(obj, "steps", list, context)
    if not steps_obj:
        raise ValidationError(f"{context}: procedure {proc_id!r} has no steps")
    _warn_unknown_keys(obj, ("id", "goal", "steps"), "procedure")

    steps = []
    for step_pos, step_obj in enumerate(steps_obj):
        step_ctx = f"{context}: procedure {proc_id!r} step {step_pos}"
        if not isinstance(step_obj, dict):
            raise ValidationError(f"{step_ctx}: step must be a JSON object")
        text = _require(step_obj, "text", str, step_ctx)
        if not text.strip():
            raise ValidationError(f"{step_ctx}: step text must be non-empty")
        changes_obj = step_obj.get("state_changes", [])
        if not isinstance(changes_obj, list):
            raise ValidationError(f"{step_ctx}: state_changes must be a list")
        _warn_unknown_keys(step_obj, ("text", "state_changes"), "step")
        changes = tuple(parse_change_entry(entry, f"{step_ctx}: ") for entry in changes_obj)
        steps.append(StepRecord(text=text, gold_changes=changes))
    return Procedure(id=proc_id, goal=goal, steps=tuple(steps))


def load_dataset(path: str | Path) -> list[Procedure]:
    """Load a canonical dataset JSONL file, preserving file order.

    Raises ValidationError on the first malformed line (message carries the
    line number) or on a duplicate procedure id.
    """
    procedures: list[Procedure] = []
    first_line: dict[str, int] = {}
    for line_no, obj in iter_jsonl(path):
        proc = procedure_from_obj(obj, context=f"{path}:{line_no}")
        if proc.id in first_line:
            raise ValidationError(
                f"{path}:{line_no}: duplicate procedure id {proc.id!r} (first seen on line {first_line[proc.id]})"
            )
        first_line[proc.id] = line_no
        procedures.append(proc)
    return procedures


def scan_dataset(path: str | Path) -> tuple[list[Procedure], list[str]]:
    """Like load_dataset but collects every per-line error instead of stopping at the first."""
    procedures: list[Procedure] = []
    errors: list[str] = []
    first_line: dict[str, int] = {}
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        return [], [str(exc)]
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(f"{path}:{line_no}: not valid JSON: {exc.msg}")
            continue
        try:
            proc = procedure_from_obj(obj, context=f"{path}:{line_no}")
        except ValidationError as exc:
            errors.append(str(exc))
            continue
        if proc.id in first_line:
            errors.append(
                f"{path}:{line_no}: duplicate procedure id {proc.id!r} (first seen on line {first_line[proc.id]})"
            )
            continue
        first_line[proc.id] = line_no
        procedures.append(proc)
    return procedures, errors


def procedure_to_obj(proc: Procedure) -> dict[str, Any]:
    return {
        "id": proc.id,
        "goal": proc.goal,
        "steps": [
            {"text": step.text, "state_changes": [c.to_dict() for c in step.gold_changes]}
            for step in proc.steps
        ],
    }


def save_dataset(procedures: Iterable[Procedure], path: str | Path) -> None:
    """Write procedures as canonical JSONL (state changes as structured objects)."""
    with open(path, "w", encoding="utf-8") as handle:
        for proc in procedures:
            handle.write(json.dumps(procedure_to_obj(proc), ensure_ascii=False) + "\n")


def load_predictions(path: str | Path, dataset: list[Procedure]) -> list[PredictionRecord]:
    """Load a prediction JSONL file and validate references against the dataset.

    Dangling procedure ids, out-of-range step indices and duplicate
    (procedure_id, step_index) pairs are collected and raised as one
    ValidationError listing every offender. Steps without a prediction
    record are logged (evaluation scores them as empty prediction sets).
    """
    step_counts = {proc.id: len(proc.steps) for proc in dataset}
    records: list[PredictionRecord] = []
    seen: dict[tuple[str, int], int] = {}
    reference_errors: list[str] = []
    for line_no, obj in iter_jsonl(path):
        context = f"{path}:{line_no}"
        if not isinstance(obj, dict):
            raise ValidationError(f"{context}: record must be a JSON object")
        proc_id = _require(obj, "procedure_id", str, context)
        step_index = _require(obj, "step_index", int, context)
        preds_obj = _require(obj, "predictions", list, context)
        _warn_unknown_keys(obj, ("procedure_id", "step_index", "predictions"), "prediction record")
        predictions = tuple(parse_change_entry(entry, f"{context}: ") for entry in preds_obj)

        if proc_id not in step_counts:
            reference_errors.append(f"{context}: unknown procedure id {proc_id!r}")
            continue
        if not 0 <= step_index < step_counts[proc_id]:
            reference_errors.append(
                f"{context}: step_index {step_index} out of range for procedure {proc_id!r} "
                f"({step_counts[proc_id]} steps)"
            )
            continue
        key = (proc_id, step_index)
        if key in seen:
            reference_errors.append(
                f"{context}: duplicate prediction for ({proc_id!r}, {step_index}), first seen on line {seen[key]}"
            )
            continue
        seen[key] = line_no
        records.append(PredictionRecord(procedure_id=proc_id, step_index=step_index, predictions=predictions))

    if reference_errors:
        raise ValidationError("invalid prediction references:\n" + "\n".join(reference_errors))

    missing = [
        (proc.id, idx)
        for proc in dataset
        for idx in range(len(proc.steps))
        if (proc.id, idx) not in seen
    ]
    if missing:
        preview = ", ".join(f"({pid!r}, {idx})" for pid, idx in missing[:5])
        logger.warning(
            "%d dataset steps have no prediction record (e.g. %s); they will score as empty predictions",
            len(missing), preview,
        )
    return records
