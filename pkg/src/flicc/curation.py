"""Data-quality pipeline: exact duplicate grouping, embedding-based
near-duplicate ranking, per-label centroid distance ranking, and isolation
forest outlier flagging, feeding a human-review report.

Removal stays manual: the tooling emits review files and applies a separately
supplied removal list (see corpus.apply_removals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Dataset
from .errors import (
    DimensionMismatch,
    EmptyInput,
    EncoderUnavailable,
    IoError,
    MissingEmbedding,
    TooFewSamples,
    ZeroVector,
)


@dataclass(frozen=True)
class EncoderConfig:
    """A pretrained bidirectional encoder plus pooling mode.

    ``model`` is a checkpoint directory or hub id; ``pooling`` is "mean"
    (mask-weighted mean of final-layer token vectors, the default) or "cls"
    (first-token vector).
    """

    model: str = "bert-base-uncased"
    pooling: str = "mean"
    max_length: int = 128
    batch_size: int = 32


@dataclass(frozen=True)
class Embedding:
    sample_id: str
    vector: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector)):
            raise ValueError(f"embedding for {self.sample_id!r} has non-finite values")


class ReviewKind(str, Enum):
    EXACT_DUP = "exact_dup"
    NEAR_DUP = "near_dup"
    CENTROID_OUTLIER = "centroid_outlier"
    FOREST_OUTLIER = "forest_outlier"


@dataclass(frozen=True)
class ReviewItem:
    kind: ReviewKind
    sample_ids: tuple[str, ...]
    score: float
    rank: int

    def __post_init__(self):
        if self.kind is ReviewKind.NEAR_DUP and len(self.sample_ids) != 2:
            raise ValueError("near-duplicate items carry exactly 2 ids")
        if self.kind in (ReviewKind.CENTROID_OUTLIER, ReviewKind.FOREST_OUTLIER):
            if len(self.sample_ids) != 1:
                raise ValueError("outlier items carry exactly 1 id")


def embed(
    texts: Sequence[str],
    config: EncoderConfig,
    sample_ids: Sequence[str] | None = None,
) -> list[Embedding]:
    """Encode texts into fixed-dimension vectors, order preserved.

    Deterministic for a fixed encoder and pooling mode: inference runs in eval
    mode with fixed-length padding, so a text embeds identically regardless of
    how calls are batched.
    """
    if not texts:
        raise EmptyInput("no texts to embed")
    if sample_ids is None:
        sample_ids = [str(i) for i in range(len(texts))]
    if config.pooling not in ("mean", "cls"):
        raise ValueError(f"unknown pooling mode {config.pooling!r}")

    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(config.model)
        model = AutoModel.from_pretrained(config.model)
    except Exception as exc:
        raise EncoderUnavailable(f"cannot load encoder {config.model!r}: {exc}") from exc
    model.eval()

    vectors: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(texts), config.batch_size):
            batch = list(texts[start : start + config.batch_size])
            enc = tokenizer(
                batch,
                return_tensors="pt",
                padding="max_length",
                truncation=True,
                max_length=config.max_length,
            )
            hidden = model(**enc).last_hidden_state
            if config.pooling == "cls":
                pooled = hidden[:, 0]
            else:
                mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
            vectors.extend(pooled.cpu().numpy())
    return [Embedding(sample_id=sid, vector=vec) for sid, vec in zip(sample_ids, vectors)]


def _as_vector(x) -> np.ndarray:
    if isinstance(x, Embedding):
        return np.asarray(x.vector, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def cosine_similarity(a, b) -> float:
    """(A·B)/(‖A‖‖B‖), clamped to [-1, 1]."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"{va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for an all-zero vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def euclidean_distance(p, q) -> float:
    """√(p·p − 2(p·q) + q·q), the dot-product expansion of the distance."""
    vp, vq = _as_vector(p), _as_vector(q)
    if vp.shape != vq.shape:
        raise DimensionMismatch(f"{vp.shape} vs {vq.shape}")
    squared = float(np.dot(vp, vp) - 2.0 * np.dot(vp, vq) + np.dot(vq, vq))
    return math.sqrt(max(squared, 0.0))


def exact_duplicates(dataset: Dataset) -> list[tuple[str, ...]]:
    """Groups of sample ids whose raw text fields are byte-identical.

    Only groups of size >= 2 are returned, ordered by first occurrence.
    Whitespace/punctuation/case variants are left for the near-duplicate stage.
    """
    by_text: dict[str, list[str]] = {}
    for sample in dataset.samples:
        by_text.setdefault(sample.text, []).append(sample.id)
    return [tuple(ids) for ids in by_text.values() if len(ids) >= 2]


def _embedding_matrix(embeddings: Sequence[Embedding]) -> tuple[list[str], np.ndarray]:
    dims = {e.vector.shape for e in embeddings}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed embedding dimensions: {sorted(dims)}")
    ids = [e.sample_id for e in embeddings]
    matrix = np.stack([np.asarray(e.vector, dtype=np.float64) for e in embeddings])
    return ids, matrix


def near_duplicate_pairs(
    embeddings: Sequence[Embedding],
    threshold: float | None = None,
    top_k: int | None = None,
) -> list[ReviewItem]:
    """Unordered pairs ranked by descending cosine similarity.

    Exactly one of ``threshold`` and ``top_k`` applies; with neither given the
    default is a top-100 review queue.
    """
    if threshold is not None and top_k is not None:
        raise ValueError("pass either threshold or top_k, not both")
    if threshold is None and top_k is None:
        top_k = 100
    if len(embeddings) < 2:
        raise TooFewSamples("need at least 2 embeddings to rank pairs")

    ids, matrix = _embedding_matrix(embeddings)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector("cosine similarity undefined for an all-zero vector")
    unit = matrix / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    iu, ju = np.triu_indices(len(ids), k=1)
    order = sorted(range(len(iu)), key=lambda k: (-sims[iu[k], ju[k]], ids[iu[k]], ids[ju[k]]))
    items = []
    for rank, k in enumerate(order, start=1):
        score = float(sims[iu[k], ju[k]])
        if threshold is not None and score < threshold:
            break
        if top_k is not None and rank > top_k:
            break
        items.append(
            ReviewItem(
                kind=ReviewKind.NEAR_DUP,
                sample_ids=(ids[iu[k]], ids[ju[k]]),
                score=score,
                rank=rank,
            )
        )
    return items


@dataclass(frozen=True)
class CentroidDistance:
    sample_id: str
    label: str
    distance: float


def centroid_distances(
    dataset: Dataset, embeddings: Sequence[Embedding]
) -> list[CentroidDistance]:
    """Distance of every sample to its own label's mean embedding, ranked
    descending (largest distance first)."""
    by_id = {e.sample_id: np.asarray(e.vector, dtype=np.float64) for e in embeddings}
    missing = [s.id for s in dataset.samples if s.id not in by_id]
    if missing:
        raise MissingEmbedding(f"samples without embeddings: {missing[:5]}")

    centroids: dict[str, np.ndarray] = {}
    for label, group in dataset.by_label().items():
        if group:
            centroids[label] = np.mean([by_id[s.id] for s in group], axis=0)

    results = [
        CentroidDistance(
            sample_id=s.id,
            label=s.label.canonical_name,
            distance=euclidean_distance(by_id[s.id], centroids[s.label.canonical_name]),
        )
        for s in dataset.samples
    ]
    return sorted(results, key=lambda r: (-r.distance, r.sample_id))


def forest_outliers(
    embeddings: Sequence[Embedding],
    contamination: float = 0.02,
    seed: int = 0,
    n_estimators: int = 100,
    max_samples: int = 256,
) -> list[ReviewItem]:
    """Isolation-forest anomaly flags: the round(contamination * n) most
    anomalous samples, most anomalous first."""
    if not 0.0 < contamination <= 0.5:
        raise ValueError(f"contamination must be in (0, 0.5], got {contamination}")
    if len(embeddings) < 10:
        raise TooFewSamples(f"need at least 10 embeddings, got {len(embeddings)}")

    from sklearn.ensemble import IsolationForest

    ids, matrix = _embedding_matrix(embeddings)
    forest = IsolationForest(
        n_estimators=n_estimators,
        max_samples=min(max_samples, len(ids)),
        random_state=seed,
    )
    forest.fit(matrix)
    # score_samples: higher means more normal; negate so higher = more anomalous
    anomaly = -forest.score_samples(matrix)
    n_flags = round(contamination * len(ids))
    order = sorted(range(len(ids)), key=lambda i: (-anomaly[i], ids[i]))[:n_flags]
    return [
        ReviewItem(
            kind=ReviewKind.FOREST_OUTLIER,
            sample_ids=(ids[i],),
            score=float(anomaly[i]),
            rank=rank,
        )
        for rank, i in enumerate(order, start=1)
    ]


def review_report(
    out: str | Path,
    exact: Sequence[tuple[str, ...]] = (),
    near: Sequence[ReviewItem] = (),
    centroid: Sequence[CentroidDistance] = (),
    forest: Sequence[ReviewItem] = (),
) -> None:
    """Write the ordered human-review file: exact duplicates first, then
    near-duplicate pairs by similarity, then the union of centroid and forest
    outliers with the overlap marked."""
    centroid_ids = {c.sample_id for c in centroid}
    forest_ids = {i.sample_ids[0] for i in forest}
    overlap = centroid_ids & forest_ids

    lines = ["# Curation review", ""]
    lines.append(f"## Exact duplicate groups ({len(exact)})")
    for group in exact:
        lines.append(f"- {', '.join(group)}")
    lines.append("")
    lines.append(f"## Near-duplicate pairs ({len(near)})")
    for item in sorted(near, key=lambda i: i.rank):
        a, b = item.sample_ids
        lines.append(f"{item.rank}. {a} <-> {b} (cosine {item.score:.4f})")
    lines.append("")
    lines.append(f"## Outliers ({len(centroid_ids | forest_ids)} unique)")
    lines.append(f"### Flagged by both centroid distance and isolation forest ({len(overlap)})")
    for c in centroid:
        if c.sample_id in overlap:
            lines.append(f"- {c.sample_id} [{c.label}] (distance {c.distance:.4f})")
    lines.append(f"### Centroid distance only ({len(centroid_ids - forest_ids)})")
    for c in centroid:
        if c.sample_id not in overlap:
            lines.append(f"- {c.sample_id} [{c.label}] (distance {c.distance:.4f})")
    lines.append(f"### Isolation forest only ({len(forest_ids - centroid_ids)})")
    for item in sorted(forest, key=lambda i: i.rank):
        if item.sample_ids[0] not in overlap:
            lines.append(f"- {item.sample_ids[0]} (anomaly {item.score:.4f})")
    lines.append("")

    try:
        Path(out).write_text("\n".join(lines), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write review report to {out}: {exc}") from exc
