"""Bidirectional codec between state-change tuples and templated sentences.

The canonical surface form is::

    <attribute> of <entity> was <before> before and <after> afterwards

Parsing tolerates "were" in place of "was" (normalized to "was") and
surrounding whitespace. Anchor ambiguity is resolved by splitting at the
FIRST " of " and at the LAST " was "/" were " and " before and "
occurrences, with the trailing " afterwards" required verbatim; fields
that themselves contain an anchor substring therefore round-trip lossily.
Sentences missing the trailing "afterwards" are rejected, not guessed.
All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import StateChange
from .errors import TemplateParseError

OF = " of "
WAS = " was "
WERE = " were "
BEFORE_AND = " before and "
AFTERWARDS = " afterwards"

ANCHORS = (OF, WAS, WERE, BEFORE_AND, "afterwards")


@dataclass(frozen=True)
class TemplatedSentence:
    """A templated sentence; ``canonical`` always uses the copula "was"."""

    raw: str
    canonical: str


def render(change: StateChange) -> TemplatedSentence:
    """Render a state change into its canonical templated sentence."""
    text = f"{change.attribute} of {change.entity} was {change.before} before and {change.after} afterwards"
    return TemplatedSentence(raw=text, canonical=text)


def parse(sentence: str) -> StateChange:
    """Parse a templated sentence back into a StateChange.

    Raises TemplateParseError naming the failing anchor when the sentence
    does not match the grammar.
    """
    stripped = sentence.strip()

    if OF not in stripped:
        raise TemplateParseError(f"missing ' of ' anchor in {sentence!r}", anchor="of", sentence=sentence)
    attribute, rest = stripped.split(OF, 1)

    if not rest.endswith(AFTERWARDS):
        raise TemplateParseError(
            f"missing trailing ' afterwards' anchor in {sentence!r}", anchor="afterwards", sentence=sentence
        )
    rest = rest[: -len(AFTERWARDS)]

    split_at = rest.rfind(BEFORE_AND)
    if split_at < 0:
        raise TemplateParseError(
            f"missing ' before and ' anchor in {sentence!r}", anchor="before and", sentence=sentence
        )
    middle, after = rest[:split_at], rest[split_at + len(BEFORE_AND):]

    was_at = middle.rfind(WAS)
    were_at = middle.rfind(WERE)
    if was_at < 0 and were_at < 0:
        raise TemplateParseError(
            f"missing ' was '/' were ' anchor in {sentence!r}", anchor="was", sentence=sentence
        )
    if was_at >= were_at:
        entity, before = middle[:was_at], middle[was_at + len(WAS):]
    else:
        entity, before = middle[:were_at], middle[were_at + len(WERE):]

    fields = {"entity": entity.strip(), "attribute": attribute.strip(),
              "before": before.strip(), "after": after.strip()}
    for name, value in fields.items():
        if not value:
            raise TemplateParseError(
                f"empty {name} field after parsing {sentence!r}", anchor=name, sentence=sentence
            )
    return StateChange(**fields)


def canonicalize(sentence: str) -> str:
    """Normalize a grammatical sentence to its canonical form (idempotent)."""
    return render(parse(sentence)).canonical


def contains_anchor(text: str) -> bool:
    """True when a field value embeds a template anchor and would parse lossily."""
    return any(anchor in text for anchor in ANCHORS)
