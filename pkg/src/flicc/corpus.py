"""Dataset schema, line-delimited JSON ingestion, stratified splitting, and
fallacy-by-claim cross-tabulation.

A dataset file is UTF-8 JSONL, one record per line, with fields ``id``,
``text``, ``label`` and optional ``claim`` and ``split``. Unknown extra fields
are preserved on round-trip.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from . import taxonomy
from .errors import (
    DuplicateId,
    EmptyText,
    InsufficientSamples,
    ParseError,
    UnknownSampleId,
    UntaggedSample,
)
from .taxonomy import FallacyLabel, canonical_names, parse_label

_CLAIM_CODE = re.compile(r"^\d\.\d$")


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


SPLIT_ORDER = (Split.TRAIN, Split.VAL, Split.TEST)


@dataclass(frozen=True)
class Sample:
    id: str
    text: str
    label: FallacyLabel
    claim: str | None = None
    split: Split | None = None
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "text": self.text, "label": self.label.canonical_name}
        if self.claim is not None:
            rec["claim"] = self.claim
        if self.split is not None:
            rec["split"] = self.split.value
        rec.update(self.extra)
        return rec


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def ids(self) -> set[str]:
        return {s.id for s in self.samples}

    def by_label(self) -> dict[str, list[Sample]]:
        groups: dict[str, list[Sample]] = {name: [] for name in canonical_names()}
        for s in self.samples:
            groups[s.label.canonical_name].append(s)
        return groups

    def subset(self, split: Split) -> "Dataset":
        return Dataset(
            samples=tuple(s for s in self.samples if s.split is split),
            provenance=self.provenance,
        )


def _sample_from_record(rec: Mapping, line: int | None = None) -> Sample:
    if not isinstance(rec, Mapping):
        raise ParseError("record is not an object", line)
    known = {"id", "text", "label", "claim", "split"}
    for fieldname in ("id", "text", "label"):
        if fieldname not in rec:
            raise ParseError(f"missing field {fieldname!r}", line)
    sample_id = rec["id"]
    if not isinstance(sample_id, str) or not sample_id:
        raise ParseError("id must be a nonempty string", line)
    text = rec["text"]
    if not isinstance(text, str):
        raise ParseError("text must be a string", line)
    if not text.strip():
        raise EmptyText(f"sample {sample_id!r} has empty text" + (f" (line {line})" if line else ""))
    label = parse_label(rec["label"])
    claim = rec.get("claim")
    if claim is not None:
        if not isinstance(claim, str) or not _CLAIM_CODE.match(claim):
            raise ParseError(f"claim code must match D.S, got {claim!r}", line)
    split_raw = rec.get("split")
    split = None
    if split_raw is not None:
        try:
            split = Split(split_raw)
        except ValueError:
            raise ParseError(f"split must be one of train/val/test, got {split_raw!r}", line)
    extra = {k: v for k, v in rec.items() if k not in known}
    return Sample(id=sample_id, text=text, label=label, claim=claim, split=split, extra=extra)


def dataset_from_records(records: Iterable[Mapping], provenance: str = "") -> Dataset:
    samples = []
    seen: set[str] = set()
    for rec in records:
        sample = _sample_from_record(rec)
        if sample.id in seen:
            raise DuplicateId(f"duplicate sample id {sample.id!r}")
        seen.add(sample.id)
        samples.append(sample)
    return Dataset(samples=tuple(samples), provenance=provenance)


def load_dataset(path: str | Path) -> Dataset:
    """Load and validate a JSONL dataset file."""
    path = Path(path)
    samples = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
            sample = _sample_from_record(rec, lineno)
            if sample.id in seen:
                raise DuplicateId(f"duplicate sample id {sample.id!r} (line {lineno})")
            seen.add(sample.id)
            samples.append(sample)
    return Dataset(samples=tuple(samples), provenance=str(path))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in dataset.samples:
            fh.write(json.dumps(sample.to_record(), ensure_ascii=False) + "\n")


def bundled_deconstructions() -> Dataset:
    """The 12 worked deconstruction examples shipped with the package,
    one per fallacy label."""
    path = resources.files("flicc").joinpath("data/deconstructions.v1.jsonl")
    with path.open("r", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    return dataset_from_records(records, provenance="bundled deconstruction examples")


def _largest_remainder_counts(n: int, fractions: tuple[float, float, float]) -> list[int]:
    """Apportion n items to the three partitions by largest remainder."""
    quotas = [f * n for f in fractions]
    counts = [int(q) for q in quotas]
    remainders = [q - c for q, c in zip(quotas, counts)]
    leftover = n - sum(counts)
    # Ties on remainder go to the larger fraction, then to partition order.
    order = sorted(range(3), key=lambda i: (-remainders[i], -fractions[i], i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def _label_rng(seed: int, label: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def stratified_split(
    dataset: Dataset,
    fractions: tuple[float, float, float],
    seed: int,
) -> Dataset:
    """Assign train/val/test tags per label with largest-remainder quotas.

    Within each label the assignment is a seeded uniform shuffle, independent
    of every other label, so a fixed seed reproduces the split exactly.
    """
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, val, test)")
    if any(f < 0 for f in fractions):
        raise ValueError("fractions must be nonnegative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")

    assignment: dict[str, Split] = {}
    for label, group in dataset.by_label().items():
        if not group:
            continue
        if len(group) < 3:
            raise InsufficientSamples(
                f"label {label!r} has {len(group)} samples; need at least 3"
            )
        counts = _largest_remainder_counts(len(group), tuple(fractions))
        if any(c == 0 for c in counts):
            empty = SPLIT_ORDER[counts.index(0)].value
            raise InsufficientSamples(
                f"label {label!r} places no samples in the {empty} partition"
            )
        indices = list(range(len(group)))
        _label_rng(seed, label).shuffle(indices)
        bounds = (counts[0], counts[0] + counts[1])
        for pos, idx in enumerate(indices):
            split = (
                Split.TRAIN if pos < bounds[0] else Split.VAL if pos < bounds[1] else Split.TEST
            )
            assignment[group[idx].id] = split

    samples = tuple(replace(s, split=assignment[s.id]) for s in dataset.samples)
    return Dataset(samples=samples, provenance=dataset.provenance)


@dataclass(frozen=True)
class SplitSummary:
    labels: tuple[str, ...]
    counts: dict  # label -> {split value -> count}
    split_totals: dict  # split value -> count
    label_totals: dict  # label -> count
    total: int

    def to_text(self) -> str:
        header = f"{'label':<24}{'train':>8}{'val':>8}{'test':>8}{'total':>8}"
        lines = [header]
        for label in self.labels:
            row = self.counts[label]
            lines.append(
                f"{label:<24}{row['train']:>8}{row['val']:>8}{row['test']:>8}"
                f"{self.label_totals[label]:>8}"
            )
        lines.append(
            f"{'total':<24}{self.split_totals['train']:>8}{self.split_totals['val']:>8}"
            f"{self.split_totals['test']:>8}{self.total:>8}"
        )
        return "\n".join(lines)


def split_summary(dataset: Dataset) -> SplitSummary:
    """Per-label sample counts per partition, with row and column totals."""
    labels = canonical_names()
    counts = {label: {s.value: 0 for s in SPLIT_ORDER} for label in labels}
    for sample in dataset.samples:
        if sample.split is None:
            raise UntaggedSample(f"sample {sample.id!r} has no split tag")
        counts[sample.label.canonical_name][sample.split.value] += 1
    split_totals = {
        s.value: sum(counts[label][s.value] for label in labels) for s in SPLIT_ORDER
    }
    label_totals = {label: sum(counts[label].values()) for label in labels}
    return SplitSummary(
        labels=labels,
        counts=counts,
        split_totals=split_totals,
        label_totals=label_totals,
        total=len(dataset),
    )


def _claim_sort_key(code: str) -> tuple[int, int]:
    major, minor = code.split(".")
    return int(major), int(minor)


@dataclass(frozen=True)
class CrossTab:
    """Fallacy-by-claim contingency table with row-normalized shares."""

    labels: tuple[str, ...]
    claims: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    row_shares: tuple[tuple[float, ...], ...]
    excluded_count: int

    def cell(self, label: str, claim: str) -> int:
        return self.counts[self.labels.index(label)][self.claims.index(claim)]

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "claims": list(self.claims),
            "counts": [list(row) for row in self.counts],
            "row_shares": [list(row) for row in self.row_shares],
            "excluded_count": self.excluded_count,
        }


def cross_tabulate(dataset: Dataset) -> CrossTab:
    """Count samples per (fallacy label, claim code) pair.

    Samples without a claim code are excluded from the matrix and reported
    via ``excluded_count``.
    """
    labels = canonical_names()
    claims = tuple(sorted({s.claim for s in dataset.samples if s.claim}, key=_claim_sort_key))
    claim_idx = {c: j for j, c in enumerate(claims)}
    label_idx = {l: i for i, l in enumerate(labels)}
    grid = [[0] * len(claims) for _ in labels]
    excluded = 0
    for sample in dataset.samples:
        if sample.claim is None:
            excluded += 1
            continue
        grid[label_idx[sample.label.canonical_name]][claim_idx[sample.claim]] += 1
    shares = []
    for row in grid:
        total = sum(row)
        shares.append(tuple(v / total for v in row) if total else tuple(0.0 for _ in row))
    return CrossTab(
        labels=labels,
        claims=claims,
        counts=tuple(tuple(row) for row in grid),
        row_shares=tuple(shares),
        excluded_count=excluded,
    )


def apply_removals(dataset: Dataset, ids: Iterable[str]) -> Dataset:
    """Drop the listed sample ids (a human-approved removal list)."""
    wanted = set(ids)
    missing = wanted - dataset.ids()
    if missing:
        raise UnknownSampleId(f"ids not in dataset: {sorted(missing)}")
    return Dataset(
        samples=tuple(s for s in dataset.samples if s.id not in wanted),
        provenance=dataset.provenance,
    )
