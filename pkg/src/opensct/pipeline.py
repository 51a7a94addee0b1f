"""Three-stage vote-based dataset cleaning, rule filters, statistics, agreement.

Vote files are JSONL, one procedure per line, positionally aligned with the
dataset file they annotate::

    {"procedure_id": str, "stage1": [label x3],
     "steps": [{"stage2": [label x3],
                "state_changes": [{"stage3": [label x2]}]}]}

Stage-1 labels: procedure | non_procedure (3 annotators; procedures with a
non_procedure majority are removed). Stage-2: valid | invalid (3 annotators;
steps with an invalid majority are removed). Stage-3: certain | uncertain |
impossible (2 annotators; a state change is removed as soon as ONE rating is
uncertain or impossible). "Majority" means at least ceil((n+1)/2) of the
votes actually present, so shorter-than-expected lists still aggregate (with
a logged warning) instead of failing.

The standalone stage filters expect their ``votes`` argument to be aligned
with the dataset they receive; ``apply_filters`` chains the stages and keeps
votes aligned internally (stage 2 prunes step votes alongside removed steps
before stage 3 runs).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import Procedure, StepRecord, iter_jsonl
from .errors import ValidationError

logger = logging.getLogger(__name__)

STAGE1_LABELS = frozenset({"procedure", "non_procedure"})
STAGE2_LABELS = frozenset({"valid", "invalid"})
STAGE3_LABELS = frozenset({"certain", "uncertain", "impossible"})
STAGE3_REMOVE = frozenset({"uncertain", "impossible"})

EXPECTED_VOTES = {"stage1": 3, "stage2": 3, "stage3": 2}
STAGES = ("1", "2", "3", "rules")


@dataclass(frozen=True)
class StepVotes:
    stage2: tuple[str, ...]
    stage3: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class ProcedureVotes:
    procedure_id: str
    stage1: tuple[str, ...]
    steps: tuple[StepVotes, ...]


VoteSet = dict[str, ProcedureVotes]


@dataclass(frozen=True)
class GranularityCount:
    input: int
    removed: int

    @property
    def retained(self) -> int:
        return self.input - self.removed

    @property
    def removed_fraction(self) -> float:
        return self.removed / self.input if self.input else 0.0


@dataclass(frozen=True)
class FilterReport:
    """Removal bookkeeping for one stage, at every granularity.

    ``unit`` names the granularity the stage acts on; the headline
    removed/retained properties read from it. Cascaded removals (a dropped
    procedure drags its steps along) are counted in the other granularities.
    """

    stage: str
    unit: str
    procedures: GranularityCount
    steps: GranularityCount
    state_changes: GranularityCount
    agreement: float | None = None

    @property
    def _primary(self) -> GranularityCount:
        return getattr(self, self.unit)

    @property
    def input_count(self) -> int:
        return self._primary.input

    @property
    def removed(self) -> int:
        return self._primary.removed

    @property
    def retained(self) -> int:
        return self._primary.retained

    @property
    def removed_fraction(self) -> float:
        return self._primary.removed_fraction

    def to_dict(self) -> dict:
        out = {
            "stage": self.stage,
            "unit": self.unit,
            "agreement": self.agreement,
        }
        for name in ("procedures", "steps", "state_changes"):
            count: GranularityCount = getattr(self, name)
            out[name] = {
                "input": count.input,
                "removed": count.removed,
                "retained": count.retained,
                "removed_fraction": count.removed_fraction,
            }
        return out


def _counts(dataset: Sequence[Procedure]) -> tuple[int, int, int]:
    n_steps = sum(len(p.steps) for p in dataset)
    n_changes = sum(len(s.gold_changes) for p in dataset for s in p.steps)
    return len(dataset), n_steps, n_changes


def _majority(votes: Sequence[str], label: str) -> bool:
    # at least ceil((n+1)/2) of the votes actually present
    return votes.count(label) >= math.ceil((len(votes) + 1) / 2)


def _validate_votes(votes: Sequence[str], labels: frozenset[str], stage: str, context: str) -> tuple[str, ...]:
    if not isinstance(votes, (list, tuple)) or not votes:
        raise ValidationError(f"{context}: {stage} votes must be a non-empty list")
    bad = [v for v in votes if v not in labels]
    if bad:
        raise ValidationError(f"{context}: {stage} labels {bad} not in {sorted(labels)}")
    if len(votes) != EXPECTED_VOTES[stage]:
        logger.warning("%s: expected %d %s votes, got %d; aggregating anyway",
                       context, EXPECTED_VOTES[stage], stage, len(votes))
    return tuple(votes)


def load_votes(path: str | Path, dataset: Sequence[Procedure] | None = None) -> VoteSet:
    """Load a vote JSONL file; with a dataset given, validate full alignment."""
    votes: VoteSet = {}
    for line_no, obj in iter_jsonl(path):
        context = f"{path}:{line_no}"
        if not isinstance(obj, dict):
            raise ValidationError(f"{context}: record must be a JSON object")
        if "procedure_id" not in obj or not isinstance(obj["procedure_id"], str):
            raise ValidationError(f"{context}: missing procedure_id")
        pid = obj["procedure_id"]
        if pid in votes:
            raise ValidationError(f"{context}: duplicate votes for procedure {pid!r}")
        stage1 = _validate_votes(obj.get("stage1", []), STAGE1_LABELS, "stage1", context)
        steps_obj = obj.get("steps", [])
        if not isinstance(steps_obj, list):
            raise ValidationError(f"{context}: steps must be a list")
        step_votes = []
        for step_pos, step_obj in enumerate(steps_obj):
            step_ctx = f"{context} step {step_pos}"
            if not isinstance(step_obj, dict):
                raise ValidationError(f"{step_ctx}: step votes must be an object")
            stage2 = _validate_votes(step_obj.get("stage2", []), STAGE2_LABELS, "stage2", step_ctx)
            changes_obj = step_obj.get("state_changes", [])
            if not isinstance(changes_obj, list):
                raise ValidationError(f"{step_ctx}: state_changes must be a list")
            stage3 = tuple(
                _validate_votes(change_obj.get("stage3", []), STAGE3_LABELS, "stage3",
                                f"{step_ctx} change {change_pos}")
                for change_pos, change_obj in enumerate(changes_obj)
            )
            step_votes.append(StepVotes(stage2=stage2, stage3=stage3))
        votes[pid] = ProcedureVotes(procedure_id=pid, stage1=stage1, steps=tuple(step_votes))

    if dataset is not None:
        validate_alignment(dataset, votes)
    return votes


def validate_alignment(dataset: Sequence[Procedure], votes: VoteSet) -> None:
    """Check that every procedure, step and state change has a matching vote entry."""
    problems = []
    for proc in dataset:
        pv = votes.get(proc.id)
        if pv is None:
            problems.append(f"no votes for procedure {proc.id!r}")
            continue
        if len(pv.steps) != len(proc.steps):
            problems.append(
                f"procedure {proc.id!r}: {len(proc.steps)} steps but {len(pv.steps)} step-vote entries"
            )
            continue
        for idx, (step, sv) in enumerate(zip(proc.steps, pv.steps)):
            if len(sv.stage3) != len(step.gold_changes):
                problems.append(
                    f"procedure {proc.id!r} step {idx}: {len(step.gold_changes)} state changes "
                    f"but {len(sv.stage3)} stage3 vote lists"
                )
    if problems:
        raise ValidationError("vote file does not align with dataset:\n" + "\n".join(problems))


def _procedure_votes(votes: VoteSet, proc: Procedure) -> ProcedureVotes:
    pv = votes.get(proc.id)
    if pv is None:
        raise ValidationError(f"missing votes for procedure {proc.id!r}")
    return pv


def _stage1(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], VoteSet, FilterReport]:
    kept: list[Procedure] = []
    kept_votes: VoteSet = {}
    vote_lists = []
    for proc in dataset:
        pv = _procedure_votes(votes, proc)
        vote_lists.append(pv.stage1)
        if _majority(pv.stage1, "non_procedure"):
            continue
        kept.append(proc)
        kept_votes[proc.id] = pv
    in_p, in_s, in_c = _counts(dataset)
    out_p, out_s, out_c = _counts(kept)
    report = FilterReport(
        stage="stage1", unit="procedures",
        procedures=GranularityCount(in_p, in_p - out_p),
        steps=GranularityCount(in_s, in_s - out_s),
        state_changes=GranularityCount(in_c, in_c - out_c),
        agreement=_unanimity(vote_lists),
    )
    return kept, kept_votes, report


def _stage2(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], VoteSet, FilterReport]:
    kept: list[Procedure] = []
    kept_votes: VoteSet = {}
    vote_lists = []
    for proc in dataset:
        pv = _procedure_votes(votes, proc)
        if len(pv.steps) != len(proc.steps):
            raise ValidationError(
                f"procedure {proc.id!r}: {len(proc.steps)} steps but {len(pv.steps)} step-vote entries"
            )
        kept_steps: list[StepRecord] = []
        kept_step_votes: list[StepVotes] = []
        for step, sv in zip(proc.steps, pv.steps):
            vote_lists.append(sv.stage2)
            if _majority(sv.stage2, "invalid"):
                continue
            kept_steps.append(step)
            kept_step_votes.append(sv)
        kept.append(replace(proc, steps=tuple(kept_steps)))
        kept_votes[proc.id] = replace(pv, steps=tuple(kept_step_votes))
    in_p, in_s, in_c = _counts(dataset)
    out_p, out_s, out_c = _counts(kept)
    report = FilterReport(
        stage="stage2", unit="steps",
        procedures=GranularityCount(in_p, in_p - out_p),
        steps=GranularityCount(in_s, in_s - out_s),
        state_changes=GranularityCount(in_c, in_c - out_c),
        agreement=_unanimity(vote_lists),
    )
    return kept, kept_votes, report


def _stage3(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], VoteSet, FilterReport]:
    kept: list[Procedure] = []
    kept_votes: VoteSet = {}
    vote_lists = []
    for proc in dataset:
        pv = _procedure_votes(votes, proc)
        if len(pv.steps) != len(proc.steps):
            raise ValidationError(
                f"procedure {proc.id!r}: {len(proc.steps)} steps but {len(pv.steps)} step-vote entries"
            )
        new_steps: list[StepRecord] = []
        new_step_votes: list[StepVotes] = []
        for idx, (step, sv) in enumerate(zip(proc.steps, pv.steps)):
            if len(sv.stage3) != len(step.gold_changes):
                raise ValidationError(
                    f"procedure {proc.id!r} step {idx}: {len(step.gold_changes)} state changes "
                    f"but {len(sv.stage3)} stage3 vote lists"
                )
            kept_changes = []
            kept_change_votes = []
            for change, cv in zip(step.gold_changes, sv.stage3):
                vote_lists.append(cv)
                if any(v in STAGE3_REMOVE for v in cv):
                    continue
                kept_changes.append(change)
                kept_change_votes.append(cv)
            new_steps.append(replace(step, gold_changes=tuple(kept_changes)))
            new_step_votes.append(replace(sv, stage3=tuple(kept_change_votes)))
        kept.append(replace(proc, steps=tuple(new_steps)))
        kept_votes[proc.id] = replace(pv, steps=tuple(new_step_votes))
    in_p, in_s, in_c = _counts(dataset)
    out_p, out_s, out_c = _counts(kept)
    report = FilterReport(
        stage="stage3", unit="state_changes",
        procedures=GranularityCount(in_p, in_p - out_p),
        steps=GranularityCount(in_s, in_s - out_s),
        state_changes=GranularityCount(in_c, in_c - out_c),
        agreement=_unanimity(vote_lists),
    )
    return kept, kept_votes, report


def stage1_filter(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], FilterReport]:
    """Remove procedures judged non-procedural by a majority of their annotators."""
    kept, _, report = _stage1(dataset, votes)
    return kept, report


def stage2_filter(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], FilterReport]:
    """Remove steps judged invalid by a majority; step order is preserved."""
    kept, _, report = _stage2(dataset, votes)
    return kept, report


def stage3_filter(dataset: Sequence[Procedure], votes: VoteSet) -> tuple[list[Procedure], FilterReport]:
    """Remove state changes with at least one uncertain or impossible rating."""
    kept, _, report = _stage3(dataset, votes)
    return kept, report


def rule_filter(dataset: Sequence[Procedure]) -> tuple[list[Procedure], FilterReport]:
    """Drop steps with no state changes, then drop procedures left with < 3 steps."""
    pruned = [
        replace(proc, steps=tuple(s for s in proc.steps if s.gold_changes))
        for proc in dataset
    ]
    kept = [proc for proc in pruned if len(proc.steps) >= 3]
    in_p, in_s, in_c = _counts(dataset)
    out_p, out_s, out_c = _counts(kept)
    report = FilterReport(
        stage="rules", unit="steps",
        procedures=GranularityCount(in_p, in_p - out_p),
        steps=GranularityCount(in_s, in_s - out_s),
        state_changes=GranularityCount(in_c, in_c - out_c),
        agreement=None,
    )
    return kept, report


def apply_filters(dataset: Sequence[Procedure], votes: VoteSet | None,
                  stages: Sequence[str] = STAGES) -> tuple[list[Procedure], list[FilterReport]]:
    """Run the selected stages in the given order, keeping votes aligned throughout."""
    unknown = [s for s in stages if s not in STAGES]
    if unknown:
        raise ValidationError(f"unknown stages {unknown}; choose from {list(STAGES)}")
    if votes is None and any(s != "rules" for s in stages):
        raise ValidationError("vote-based stages requested but no votes given")
    current = list(dataset)
    current_votes = dict(votes) if votes else {}
    reports: list[FilterReport] = []
    for stage in stages:
        if stage == "1":
            current, current_votes, report = _stage1(current, current_votes)
        elif stage == "2":
            current, current_votes, report = _stage2(current, current_votes)
        elif stage == "3":
            current, current_votes, report = _stage3(current, current_votes)
        else:
            current, report = rule_filter(current)
        reports.append(report)
    return current, reports


# -- agreement and statistics --

def _unanimity(vote_lists: Iterable[Sequence[str]]) -> float:
    lists = list(vote_lists)
    if not lists:
        return 1.0
    unanimous = sum(1 for votes in lists if len(set(votes)) == 1)
    return unanimous / len(lists)


def compute_agreement(votes: VoteSet, stage: str | int) -> float:
    """Fraction of the stage's data points whose annotators all agree."""
    stage = str(stage).removeprefix("stage")
    if stage == "1":
        return _unanimity(pv.stage1 for pv in votes.values())
    if stage == "2":
        return _unanimity(sv.stage2 for pv in votes.values() for sv in pv.steps)
    if stage == "3":
        return _unanimity(cv for pv in votes.values() for sv in pv.steps for cv in sv.stage3)
    raise ValidationError(f"unknown stage {stage!r}; choose 1, 2 or 3")


@dataclass(frozen=True)
class SplitStats:
    procedures: int
    steps: int
    state_changes: int


@dataclass(frozen=True)
class DatasetStats:
    splits: tuple[tuple[str, SplitStats], ...]

    @property
    def totals(self) -> SplitStats:
        return SplitStats(
            procedures=sum(s.procedures for _, s in self.splits),
            steps=sum(s.steps for _, s in self.splits),
            state_changes=sum(s.state_changes for _, s in self.splits),
        )

    def to_dict(self) -> dict:
        out = {
            name: {"procedures": s.procedures, "steps": s.steps, "state_changes": s.state_changes}
            for name, s in self.splits
        }
        totals = self.totals
        return {"splits": out, "total": {
            "procedures": totals.procedures, "steps": totals.steps, "state_changes": totals.state_changes,
        }}


def compute_stats(splits: Mapping[str, Sequence[Procedure]]) -> DatasetStats:
    """Exact procedure/step/state-change counts per split."""
    rows = []
    for name, procedures in splits.items():
        n_p, n_s, n_c = _counts(list(procedures))
        rows.append((name, SplitStats(procedures=n_p, steps=n_s, state_changes=n_c)))
    return DatasetStats(splits=tuple(rows))
