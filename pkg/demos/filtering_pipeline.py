"""Run the three vote-aggregation stages plus rule filters over a small dataset.

Stage 1 drops procedures a majority called non-procedural, stage 2 drops
steps a majority called invalid, stage 3 drops any state change with even
one uncertain/impossible rating, and the rule stage drops empty steps and
then procedures left with fewer than three steps.

Run: python3 demos/filtering_pipeline.py
"""

from opensct import Procedure, StateChange, StepRecord, apply_filters, compute_stats
from opensct.pipeline import ProcedureVotes, StepVotes


def change(entity, before, after):
    return StateChange(entity=entity, attribute="state", before=before, after=after)


def main():
    dataset = [
        Procedure(id="make-tea", goal="Make tea", steps=(
            StepRecord("Boil the water", (change("water", "still", "boiling"),)),
            StepRecord("Warm the pot", (change("pot", "cold", "warm"),)),
            StepRecord("Steep the leaves", (change("leaves", "dry", "steeped"),
                                            change("water", "clear", "amber"))),
            StepRecord("Stir patiently", ()),  # no state changes: the rule stage drops it
            StepRecord("Pour the tea", (change("cup", "empty", "full"),)),
        )),
        Procedure(id="trivia-list", goal="Facts about tea", steps=(
            StepRecord("Tea is popular", (change("tea", "unknown", "known"),)),
        )),
    ]
    votes = {
        "make-tea": ProcedureVotes("make-tea", ("procedure",) * 3, (
            StepVotes(("valid",) * 3, (("certain", "certain"),)),
            StepVotes(("invalid", "invalid", "valid"), (("certain", "certain"),)),  # majority invalid
            StepVotes(("valid",) * 3, (("certain", "certain"), ("certain", "uncertain"))),
            StepVotes(("valid",) * 3, ()),
            StepVotes(("valid",) * 3, (("certain", "certain"),)),
        )),
        # two of three annotators say this is not a procedure
        "trivia-list": ProcedureVotes("trivia-list", ("non_procedure", "non_procedure", "procedure"), (
            StepVotes(("valid",) * 3, (("certain", "certain"),)),
        )),
    }

    print("before:", compute_stats({"demo": dataset}).to_dict()["splits"]["demo"])
    filtered, reports = apply_filters(dataset, votes, stages=("1", "2", "3", "rules"))
    for report in reports:
        print(f"stage {report.stage:<7} unit {report.unit:<14} "
              f"removed {report.removed}/{report.input_count}"
              + (f"  agreement {report.agreement:.2f}" if report.agreement is not None else ""))
    print("after:", compute_stats({"demo": filtered}).to_dict()["splits"]["demo"])
    for proc in filtered:
        print(f"\nsurviving procedure {proc.id!r}:")
        for step in proc.steps:
            print(f"    {step.text} ({len(step.gold_changes)} changes)")


if __name__ == "__main__":
    main()
