"""Shared test fixtures: reference counts and independent metric oracles.

The oracle implementations here are deliberately naive (per-class full scans,
plain dicts) so they stay independent of the library's vectorized paths.
"""

from __future__ import annotations

from flicc.corpus import Dataset, dataset_from_records
from flicc.taxonomy import canonical_names

# Published FLICC corpus partition sizes: label -> (train, val, test).
REFERENCE_SPLIT_COUNTS = {
    "ad hominem": (264, 67, 37),
    "anecdote": (170, 43, 24),
    "cherry picking": (222, 56, 31),
    "conspiracy theory": (154, 39, 22),
    "fake experts": (44, 12, 7),
    "false choice": (48, 13, 7),
    "false equivalence": (52, 14, 8),
    "impossible expectations": (144, 37, 21),
    "misrepresentation": (151, 38, 22),
    "oversimplification": (143, 36, 20),
    "single cause": (226, 57, 32),
    "slothful induction": (178, 45, 25),
}

REFERENCE_TOTALS = (1796, 457, 256, 2509)


def reference_label_totals() -> dict[str, int]:
    return {label: sum(row) for label, row in REFERENCE_SPLIT_COUNTS.items()}


def reference_split_labels(partition: str) -> list[str]:
    """The flat label sequence of one reference partition."""
    index = {"train": 0, "val": 1, "test": 2}[partition]
    labels = []
    for name in canonical_names():
        labels.extend([name] * REFERENCE_SPLIT_COUNTS[name][index])
    return labels


def make_dataset_from_counts(label_counts: dict[str, int], prefix: str = "s") -> Dataset:
    """A dataset with the given per-label sizes and placeholder texts."""
    records = []
    for label, count in label_counts.items():
        slug = label.replace(" ", "-")
        for i in range(count):
            records.append(
                {
                    "id": f"{prefix}-{slug}-{i:04d}",
                    "text": f"placeholder {label} sample number {i}",
                    "label": label,
                }
            )
    return dataset_from_records(records)


def oracle_per_class(truths: list[str], preds: list[str]) -> dict[str, dict]:
    """Brute-force one-vs-rest counts and scores, one full scan per class."""
    out = {}
    for cls in canonical_names():
        tp = fp = fn = tn = 0
        for t, p in zip(truths, preds):
            if t == cls and p == cls:
                tp += 1
            elif t != cls and p == cls:
                fp += 1
            elif t == cls and p != cls:
                fn += 1
            else:
                tn += 1
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = (2 * tp) / (2 * tp + fp + fn) if (2 * tp + fp + fn) > 0 else 0.0
        out[cls] = {
            "tp": tp,
            "tn": tn,
            "fp": fp,
            "fn": fn,
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp + fn,
        }
    return out


def oracle_report(truths: list[str], preds: list[str]) -> dict:
    per_class = oracle_per_class(truths, preds)
    n = len(truths)
    correct = sum(1 for t, p in zip(truths, preds) if t == p)
    k = len(per_class)
    macro = {
        key: sum(c[key] for c in per_class.values()) / k
        for key in ("precision", "recall", "f1")
    }
    weighted = {
        key: sum(c[key] * c["support"] for c in per_class.values()) / n
        for key in ("precision", "recall", "f1")
    }
    return {
        "accuracy": correct / n,
        "per_class": per_class,
        "macro": macro,
        "weighted": weighted,
    }


def oracle_confusion(truths: list[str], preds: list[str]) -> list[list[int]]:
    names = list(canonical_names())
    grid = [[0] * len(names) for _ in names]
    for t, p in zip(truths, preds):
        grid[names.index(t)][names.index(p)] += 1
    return grid
