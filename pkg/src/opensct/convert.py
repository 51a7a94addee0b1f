"""Converter from plausible upstream dataset layouts to the canonical schema.

Upstream releases of the WikiHow procedure data vary in key spelling and in
whether state changes are structured or templated. This converter accepts,
per record:

* id under ``id`` / ``wikihow_id`` / ``url`` (else a positional id is made);
* the goal under ``goal`` / ``title`` / ``question``;
* steps either as plain strings or objects with ``text`` / ``sentence`` /
  ``step``;
* state changes under ``state_changes`` / ``changes`` / ``answers`` /
  ``states``, each structured or templated (one trailing "." is stripped
  from templated strings before parsing, a known upstream artifact).

Anything else should be reshaped by hand first; the converter is meant to
absorb key-spelling drift, not arbitrary formats.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import Procedure, StateChange, StepRecord, iter_jsonl, parse_change_entry, save_dataset
from .errors import ValidationError

_ID_KEYS = ("id", "wikihow_id", "url")
_GOAL_KEYS = ("goal", "title", "question")
_STEP_TEXT_KEYS = ("text", "sentence", "step")
_CHANGE_KEYS = ("state_changes", "changes", "answers", "states")


def _first_key(obj: dict, keys: tuple[str, ...]) -> Any:
    for key in keys:
        if key in obj:
            return obj[key]
    return None


def _convert_change(entry: Any, context: str) -> StateChange:
    if isinstance(entry, str):
        entry = entry.strip()
        if entry.endswith("."):
            entry = entry[:-1].rstrip()
    return parse_change_entry(entry, context)


def convert_record(obj: Any, fallback_id: str, context: str = "record") -> Procedure:
    """Map one upstream record to a canonical Procedure."""
    if not isinstance(obj, dict):
        raise ValidationError(f"{context}: record must be a JSON object")
    proc_id = _first_key(obj, _ID_KEYS) or fallback_id
    goal = _first_key(obj, _GOAL_KEYS)
    if not isinstance(goal, str) or not goal.strip():
        raise ValidationError(f"{context}: no usable goal under any of {_GOAL_KEYS}")
    steps_obj = obj.get("steps")
    if not isinstance(steps_obj, list) or not steps_obj:
        raise ValidationError(f"{context}: no usable non-empty 'steps' list")
    steps = []
    for pos, step_obj in enumerate(steps_obj):
        step_ctx = f"{context} step {pos}"
        if isinstance(step_obj, str):
            text, changes_obj = step_obj, []
        elif isinstance(step_obj, dict):
            text = _first_key(step_obj, _STEP_TEXT_KEYS)
            changes_obj = _first_key(step_obj, _CHANGE_KEYS) or []
        else:
            raise ValidationError(f"{step_ctx}: step must be a string or object")
        if not isinstance(text, str) or not text.strip():
            raise ValidationError(f"{step_ctx}: no usable step text under any of {_STEP_TEXT_KEYS}")
        if not isinstance(changes_obj, list):
            raise ValidationError(f"{step_ctx}: state changes must be a list")
        changes = tuple(_convert_change(entry, f"{step_ctx}: ") for entry in changes_obj)
        steps.append(StepRecord(text=text, gold_changes=changes))
    return Procedure(id=str(proc_id), goal=goal, steps=tuple(steps))


def convert_file(source: str | Path, destination: str | Path) -> int:
    """Convert an upstream JSONL (or single JSON array) file to canonical JSONL.

    Returns the number of procedures written.
    """
    source = Path(source)
    records: list[tuple[int, Any]]
    text = source.read_text(encoding="utf-8").lstrip()
    if text.startswith("["):
        records = list(enumerate(json.loads(text), start=1))
    else:
        records = list(iter_jsonl(source))
    procedures = []
    seen: set[str] = set()
    for line_no, obj in records:
        proc = convert_record(obj, fallback_id=f"proc-{line_no:05d}", context=f"{source}:{line_no}")
        if proc.id in seen:
            raise ValidationError(f"{source}:{line_no}: duplicate procedure id {proc.id!r}")
        seen.add(proc.id)
        procedures.append(proc)
    save_dataset(procedures, destination)
    return len(procedures)
