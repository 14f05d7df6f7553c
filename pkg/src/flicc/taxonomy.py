"""The 12-label FLICC fallacy taxonomy and the CARDS claim-code vocabulary.

Labels are loaded from a versioned data file bundled with the package and
exposed in a fixed canonical order (ascending lexicographic on the canonical
name). Every report, confusion matrix, and classifier head in the workbench
uses this order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .errors import UnknownLabel

TAXONOMY_VERSION = 1

# Punctuation stripped from the end of a raw label string, nothing more
# aggressive: multi-word labels must survive normalization.
_TERMINAL_PUNCTUATION = ".,;:!?"


class FallacyType(str, Enum):
    """Structural fallacies are detectable from the argument's form alone;
    background-knowledge fallacies require factual knowledge to spot."""

    STRUCTURAL = "structural"
    BACKGROUND_KNOWLEDGE = "background_knowledge"


@dataclass(frozen=True)
class FallacyLabel:
    canonical_name: str
    display_name: str
    fallacy_type: FallacyType
    definition: str
    argument_structure: str | None = None

    def __str__(self) -> str:
        return self.canonical_name


@dataclass(frozen=True)
class CardsClaim:
    """One contrarian-claim code from the CARDS taxonomy, e.g. '5.2'."""

    code: str
    description: str


def _data_lines(filename: str):
    path = resources.files("flicc").joinpath("data").joinpath(filename)
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


@lru_cache(maxsize=1)
def fallacy_labels() -> tuple[FallacyLabel, ...]:
    """All 12 fallacy labels in canonical (alphabetical) order."""
    labels = tuple(
        FallacyLabel(
            canonical_name=rec["canonical_name"],
            display_name=rec["display_name"],
            fallacy_type=FallacyType(rec["fallacy_type"]),
            definition=rec["definition"],
            argument_structure=rec["argument_structure"],
        )
        for rec in _data_lines(f"taxonomy.v{TAXONOMY_VERSION}.jsonl")
    )
    assert list(labels) == sorted(labels, key=lambda l: l.canonical_name)
    assert len(labels) == 12
    return labels


@lru_cache(maxsize=1)
def canonical_names() -> tuple[str, ...]:
    return tuple(label.canonical_name for label in fallacy_labels())


@lru_cache(maxsize=1)
def cards_claims() -> tuple[CardsClaim, ...]:
    """Known CARDS claim codes, ordered by code."""
    return tuple(
        CardsClaim(code=rec["code"], description=rec["description"])
        for rec in _data_lines(f"cards.v{TAXONOMY_VERSION}.jsonl")
    )


def normalize_label_text(raw: str) -> str:
    """Lowercase, trim, collapse internal whitespace, and strip terminal
    punctuation from a raw label string."""
    collapsed = " ".join(raw.lower().split())
    return collapsed.rstrip(_TERMINAL_PUNCTUATION).rstrip()


def parse_label(raw: str) -> FallacyLabel:
    """Resolve an arbitrary string to its canonical fallacy label.

    Raises UnknownLabel when the normalized string matches none of the 12.
    """
    normalized = normalize_label_text(raw)
    by_name = _labels_by_name()
    if normalized in by_name:
        return by_name[normalized]
    raise UnknownLabel(f"not a fallacy label: {raw!r}")


@lru_cache(maxsize=1)
def _labels_by_name() -> dict[str, FallacyLabel]:
    return {label.canonical_name: label for label in fallacy_labels()}


def label_info(label: FallacyLabel | str) -> tuple[str, FallacyType, str | None]:
    """Definition, fallacy type, and argument-structure template for a label."""
    if isinstance(label, str):
        label = parse_label(label)
    return label.definition, label.fallacy_type, label.argument_structure


def taxonomy_payload() -> dict:
    """JSON-ready taxonomy snapshot served by GET /labels."""
    return {
        "version": TAXONOMY_VERSION,
        "labels": [
            {
                "canonical_name": label.canonical_name,
                "display_name": label.display_name,
                "fallacy_type": label.fallacy_type.value,
                "definition": label.definition,
                "argument_structure": label.argument_structure,
            }
            for label in fallacy_labels()
        ],
    }
