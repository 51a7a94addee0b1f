"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

from opensct import Procedure, SimilarityScorer, StateChange, StepRecord
from opensct.pipeline import ProcedureVotes, StepVotes, VoteSet


def stub_scorer(pairs: dict[tuple[str, str], float] | None = None,
                symmetric: bool = True, default: float = 0.0) -> SimilarityScorer:
    """Lookup-table scorer; S(x, x) = 1, unknown pairs score ``default``."""
    table: dict[tuple[str, str], float] = {}
    for (a, b), value in (pairs or {}).items():
        table[(a, b)] = value
        if symmetric:
            table[(b, a)] = value

    def fn(x: str, y: str) -> float:
        if x == y:
            return 1.0
        return table.get((x, y), default)

    return SimilarityScorer(name="stub", symmetric=symmetric, fn=fn)


def change(entity: str, attribute: str = "state", before: str = "old", after: str = "new") -> StateChange:
    return StateChange(entity=entity, attribute=attribute, before=before, after=after)


def procedure(pid: str, n_steps: int = 3, changes_per_step: int = 1, goal: str | None = None) -> Procedure:
    steps = tuple(
        StepRecord(
            text=f"do thing {i}",
            gold_changes=tuple(
                change(f"{pid}-item-{i}-{j}", before=f"a{j}", after=f"b{j}")
                for j in range(changes_per_step)
            ),
        )
        for i in range(n_steps)
    )
    return Procedure(id=pid, goal=goal or f"goal for {pid}", steps=steps)


def write_jsonl(path: Path, records: list) -> Path:
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), encoding="utf-8")
    return path


def dataset_obj(pid: str, steps: list[list[dict | str]], goal: str = "a goal") -> dict:
    return {
        "id": pid,
        "goal": goal,
        "steps": [{"text": f"step {i}", "state_changes": changes} for i, changes in enumerate(steps)],
    }


def build_paper_fraction_fixture() -> tuple[list[Procedure], VoteSet]:
    """Synthetic dataset + votes whose stage removal fractions and agreements
    are exact by construction: stage 1 removes 75/500 procedures (15%, 347
    unanimous = 69.4%), stage 2 removes 74/1000 surviving steps (7.4%, 849
    unanimous = 84.9%), stage 3 removes 320/1000 surviving state changes
    (32%, 710 unanimous = 71.0%).
    """
    stage1_lists = (
        [("non_procedure",) * 3] * 40
        + [("non_procedure", "non_procedure", "procedure")] * 35
        + [("procedure",) * 3] * 307
        + [("procedure", "procedure", "non_procedure")] * 118
    )
    assert len(stage1_lists) == 500
    removed_first = 75  # the 75 non-procedure-majority entries come first

    def stage2_votes(step_counter: int) -> tuple[str, ...]:
        if step_counter < 20:
            return ("invalid",) * 3
        if step_counter < 74:
            return ("invalid", "invalid", "valid")
        if step_counter < 903:
            return ("valid",) * 3
        return ("valid", "valid", "invalid")

    def stage3_votes(change_counter: int) -> tuple[str, ...]:
        if change_counter < 15:
            return ("uncertain", "uncertain")
        if change_counter < 30:
            return ("impossible", "impossible")
        if change_counter < 175:
            return ("certain", "uncertain")
        if change_counter < 320:
            return ("certain", "impossible")
        return ("certain", "certain")

    procedures: list[Procedure] = []
    votes: VoteSet = {}
    step_counter = 0       # over steps of stage-1 survivors
    surviving_step = 0     # over steps that survive stage 2
    change_counter = 0     # over state changes of stage-2 survivors
    for index, stage1 in enumerate(stage1_lists):
        pid = f"p{index:03d}"
        survives_stage1 = index >= removed_first
        if not survives_stage1:
            n_steps = 1
        else:
            kept_rank = index - removed_first
            n_steps = 3 if kept_rank < 150 else 2
        steps = []
        step_vote_entries = []
        for s in range(n_steps):
            if survives_stage1:
                s2 = stage2_votes(step_counter)
                step_counter += 1
            else:
                s2 = ("valid",) * 3  # filler; pruned with its procedure at stage 1
            step_survives = survives_stage1 and not (s2.count("invalid") >= 2)
            if step_survives:
                n_changes = 1 if surviving_step < 852 else 2
                surviving_step += 1
            else:
                n_changes = 1
            changes = []
            change_vote_entries = []
            for c in range(n_changes):
                changes.append(change(f"{pid}-e{s}-{c}", before=f"x{c}", after=f"y{c}"))
                if step_survives:
                    change_vote_entries.append(stage3_votes(change_counter))
                    change_counter += 1
                else:
                    change_vote_entries.append(("certain", "certain"))  # filler
            steps.append(StepRecord(text=f"step {s} of {pid}", gold_changes=tuple(changes)))
            step_vote_entries.append(StepVotes(stage2=s2, stage3=tuple(change_vote_entries)))
        procedures.append(Procedure(id=pid, goal=f"goal {pid}", steps=tuple(steps)))
        votes[pid] = ProcedureVotes(procedure_id=pid, stage1=stage1, steps=tuple(step_vote_entries))

    assert step_counter == 1000
    assert surviving_step == 926
    assert change_counter == 1000
    return procedures, votes


PARAPHRASE_FIXTURE = [
    "location of spray bottle was shelf before and hand afterwards",
    "location of the spray bottle was shelf before and hand afterwards",
    "temperature of oven was cold before and hot afterwards",
    "temperature of the oven was cold before and hot afterwards",
    "shape of potato was whole before and cut in half afterwards",
]
