"""Evaluation arithmetic: accuracy, one-vs-rest precision/recall/F1 with
macro and weighted aggregates, row-normalizable confusion matrices, and the
ZeroR most-frequent-class baseline.

Zero-denominator convention: precision, recall, and F1 are 0 when undefined.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyInput, LengthMismatch, UnknownLabel
from .taxonomy import FallacyLabel, canonical_names, parse_label

# Prediction sentinel for classifiers that can decline to answer (for example
# LLM verdicts that normalize to no label). A MISS never matches any class, so
# it counts against accuracy and inflates false negatives only.
MISS = "__miss__"


def _as_name(value: FallacyLabel | str, *, allow_miss: bool) -> str:
    if isinstance(value, FallacyLabel):
        return value.canonical_name
    if value == MISS:
        if allow_miss:
            return MISS
        raise UnknownLabel("MISS sentinel not allowed here")
    return parse_label(value).canonical_name


def _paired_names(
    truths: Sequence, predictions: Sequence, *, allow_miss_predictions: bool = True
) -> tuple[list[str], list[str]]:
    if len(truths) != len(predictions):
        raise LengthMismatch(f"{len(truths)} truths vs {len(predictions)} predictions")
    if not truths:
        raise EmptyInput("no (truth, prediction) pairs")
    t = [_as_name(x, allow_miss=False) for x in truths]
    p = [_as_name(x, allow_miss=allow_miss_predictions) for x in predictions]
    return t, p


def accuracy(truths: Sequence, predictions: Sequence) -> float:
    """Fraction of positions where prediction equals truth."""
    t, p = _paired_names(truths, predictions)
    return sum(1 for a, b in zip(t, p) if a == b) / len(t)


@dataclass(frozen=True)
class MetricCounts:
    tp: int
    tn: int
    fp: int
    fn: int


@dataclass(frozen=True)
class ClassScores:
    counts: MetricCounts
    precision: float
    recall: float
    f1: float
    support: int


def _scores_from_counts(tp: int, tn: int, fp: int, fn: int) -> ClassScores:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return ClassScores(
        counts=MetricCounts(tp=tp, tn=tn, fp=fp, fn=fn),
        precision=precision,
        recall=recall,
        f1=f1,
        support=tp + fn,
    )


def per_class_scores(truths: Sequence, predictions: Sequence) -> dict[str, ClassScores]:
    """One-vs-rest counts and scores for each of the 12 classes, in canonical
    order. Predictions equal to MISS match no class."""
    t, p = _paired_names(truths, predictions)
    n = len(t)
    result: dict[str, ClassScores] = {}
    for name in canonical_names():
        tp = sum(1 for a, b in zip(t, p) if a == name and b == name)
        fp = sum(1 for a, b in zip(t, p) if a != name and b == name)
        fn = sum(1 for a, b in zip(t, p) if a == name and b != name)
        tn = n - tp - fp - fn
        result[name] = _scores_from_counts(tp, tn, fp, fn)
    return result


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassificationReport:
    per_class: dict  # label -> ClassScores, canonical order
    accuracy: float
    macro_avg: Averages
    weighted_avg: Averages
    n: int

    def to_text(self) -> str:
        width = max(len(name) for name in self.per_class) + 2
        lines = [f"{'':<{width}}precision    recall  f1-score   support"]
        for name, s in self.per_class.items():
            lines.append(
                f"{name:<{width}}{s.precision:>9.2f}{s.recall:>10.2f}{s.f1:>10.2f}{s.support:>10}"
            )
        lines.append("")
        lines.append(f"{'accuracy':<{width}}{'':>9}{'':>10}{self.accuracy:>10.2f}{self.n:>10}")
        for label, avg in (("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)):
            lines.append(
                f"{label:<{width}}{avg.precision:>9.2f}{avg.recall:>10.2f}{avg.f1:>10.2f}{self.n:>10}"
            )
        return "\n".join(lines)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n": self.n,
            "accuracy": self.accuracy,
            "per_class": [
                {
                    "label": name,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for name, s in self.per_class.items()
            ],
            "macro_avg": vars(self.macro_avg),
            "weighted_avg": vars(self.weighted_avg),
        }


def report(truths: Sequence, predictions: Sequence) -> ClassificationReport:
    """Full classification report with macro and support-weighted averages."""
    scores = per_class_scores(truths, predictions)
    n = len(truths)
    k = len(scores)
    macro = Averages(
        precision=sum(s.precision for s in scores.values()) / k,
        recall=sum(s.recall for s in scores.values()) / k,
        f1=sum(s.f1 for s in scores.values()) / k,
    )
    weighted = Averages(
        precision=sum(s.precision * s.support for s in scores.values()) / n,
        recall=sum(s.recall * s.support for s in scores.values()) / n,
        f1=sum(s.f1 * s.support for s in scores.values()) / n,
    )
    return ClassificationReport(
        per_class=scores,
        accuracy=accuracy(truths, predictions),
        macro_avg=macro,
        weighted_avg=weighted,
        n=n,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed (actual row, predicted column) in canonical order."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def row(self, label: str) -> tuple[int, ...]:
        return self.counts[self.labels.index(label)]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def confusion(truths: Sequence, predictions: Sequence) -> ConfusionMatrix:
    t, p = _paired_names(truths, predictions, allow_miss_predictions=False)
    labels = canonical_names()
    idx = {name: i for i, name in enumerate(labels)}
    grid = [[0] * len(labels) for _ in labels]
    for a, b in zip(t, p):
        grid[idx[a]][idx[b]] += 1
    return ConfusionMatrix(labels=labels, counts=tuple(tuple(row) for row in grid))


def row_normalize(matrix: ConfusionMatrix) -> list[list[float]]:
    """Divide each nonzero row by its sum; zero rows stay zero."""
    out = []
    for row in matrix.counts:
        total = sum(row)
        out.append([v / total for v in row] if total else [0.0] * len(row))
    return out


def format_normalized_cells(row: Iterable[float]) -> list[str]:
    """Two-decimal cell strings with exact zeros rendered blank."""
    return ["" if v == 0 else f"{v:.2f}" for v in row]


def render_confusion(matrix: ConfusionMatrix, normalized: bool = True) -> str:
    """Text rendering of the confusion matrix; normalized mode shows
    two-decimal shares and blanks zero cells."""
    width = max(len(name) for name in matrix.labels) + 2
    cell_w = 6
    header = " " * width + "".join(f"{f'p{i + 1:02d}':>{cell_w}}" for i in range(len(matrix.labels)))
    lines = [header]
    norm = row_normalize(matrix) if normalized else None
    for i, name in enumerate(matrix.labels):
        if normalized:
            cells = format_normalized_cells(norm[i])
        else:
            cells = [str(v) if v else "" for v in matrix.counts[i]]
        lines.append(f"{name:<{width}}" + "".join(f"{c:>{cell_w}}" for c in cells))
    legend = ", ".join(f"p{i + 1:02d}={name}" for i, name in enumerate(matrix.labels))
    lines.append(f"predicted columns: {legend}")
    return "\n".join(lines)


@dataclass(frozen=True)
class ZeroR:
    """Constant classifier that always predicts the modal training label."""

    label: FallacyLabel

    def predict(self, inputs: Sequence) -> list[FallacyLabel]:
        return [self.label] * len(inputs)


def zero_r(train_labels: Sequence) -> ZeroR:
    """Fit the most-frequent-class baseline; ties break by canonical order."""
    if not train_labels:
        raise EmptyInput("no training labels")
    names = [_as_name(x, allow_miss=False) for x in train_labels]
    freq = Counter(names)
    order = {name: i for i, name in enumerate(canonical_names())}
    winner = min(freq, key=lambda name: (-freq[name], order[name]))
    return ZeroR(label=parse_label(winner))
