"""Fine-tuning harness for the staged hyperparameter protocol.

Stage 1 sweeps learning rates with cross-entropy loss and no weight decay,
stage 2 sweeps the focal-loss gamma at the stage-1 winner, stage 3 adds weight
decay at the best configuration so far, and stage 4 tries low-rank adaptation.
Every run trains for at most ``max_epochs`` epochs with early stopping after
``patience`` consecutive epochs without a strictly better validation F1-macro,
and the epoch with the best validation F1-macro wins.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import logging
import random
import time
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .corpus import Dataset
from .errors import (
    CheckpointUnavailable,
    DivergedLoss,
    EmptyInput,
    InvalidSimplex,
    OutOfMemory,
)
from .taxonomy import canonical_names

logger = logging.getLogger(__name__)

ARTIFACT_SCHEMA = 1

# Staged-protocol grids.
PROTOCOL_LEARNING_RATES = (1.0e-5, 5.0e-5, 1.0e-4)
PROTOCOL_GAMMAS = (2.0, 4.0, 8.0, 12.0)
PROTOCOL_WEIGHT_DECAYS = (0.01, 0.1)
PROTOCOL_LORA_VALUES = (8, 16)
PROTOCOL_STAGES = ("lr", "gamma", "wd", "lora")

# log(0) guard inside the loss; far below any reported precision.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LoraSettings:
    rank: int
    alpha: int


@dataclass(frozen=True)
class TrainConfig:
    checkpoint_id: str
    learning_rate: float = 1.0e-5
    loss: str = "cross_entropy"  # "cross_entropy" | "focal"
    gamma: float | None = None
    weight_decay: float = 0.0
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    seed: int = 0
    max_length: int = 128
    lora: LoraSettings | None = None

    def __post_init__(self):
        if self.loss not in ("cross_entropy", "focal"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "focal":
            if self.gamma is None or self.gamma < 0:
                raise ValueError("focal loss requires gamma >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")

    def to_json_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if data.get("lora") is not None:
            data["lora"] = LoraSettings(**data["lora"])
        return cls(**data)

    def version_string(self) -> str:
        digest = hashlib.sha256(
            json.dumps(self.to_json_dict(), sort_keys=True).encode()
        ).hexdigest()
        return f"{self.checkpoint_id}#{digest[:8]}"


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_f1_macro: float
    val_accuracy: float
    wall_seconds: float


@dataclass
class RunResult:
    config: TrainConfig
    history: list[EpochRecord]
    best_epoch: int
    best_val_f1_macro: float
    model_artifact: Path | None = None
    test_report: metrics.ClassificationReport | None = None


def focal_loss(class_probabilities: Sequence[float], true_class: int, gamma: float) -> float:
    """-(1 - p_t)^gamma * log(p_t) for a single probability vector.

    The batch loss is the mean of this over samples. With gamma = 0 this is
    exactly cross-entropy.
    """
    probs = np.asarray(class_probabilities, dtype=np.float64)
    if probs.ndim != 1 or not 0 <= true_class < probs.shape[0]:
        raise InvalidSimplex(f"true_class {true_class} out of range for {probs.shape}")
    if np.any(probs < -1e-9) or abs(float(probs.sum()) - 1.0) > 1e-6:
        raise InvalidSimplex(f"probabilities must be a simplex, got sum {probs.sum()}")
    p_t = float(np.clip(probs[true_class], PROB_FLOOR, 1.0))
    return -((1.0 - p_t) ** gamma) * np.log(p_t)


def mean_focal_loss(prob_rows: Sequence[Sequence[float]], true_classes: Sequence[int],
                    gamma: float) -> float:
    return float(np.mean([focal_loss(p, t, gamma) for p, t in zip(prob_rows, true_classes)]))


class EarlyStopper:
    """Stop after `patience` consecutive epochs without strict improvement."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best_value = float("-inf")
        self.best_index = 0
        self.stale = 0
        self.count = 0

    def update(self, value: float) -> bool:
        """Record one epoch's metric; returns True when training should stop."""
        self.count += 1
        if value > self.best_value:
            self.best_value = value
            self.best_index = self.count
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def _dataset_texts_targets(dataset: Dataset) -> tuple[list[str], list[int]]:
    index = {name: i for i, name in enumerate(canonical_names())}
    texts, targets = [], []
    for sample in dataset.samples:
        texts.append(sample.text)
        targets.append(index[sample.label.canonical_name])
    return texts, targets


def _load_checkpoint(config: TrainConfig):
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    from .checkpoints import quiet_transformers

    quiet_transformers()
    labels = canonical_names()
    try:
        tokenizer = AutoTokenizer.from_pretrained(config.checkpoint_id)
        model = AutoModelForSequenceClassification.from_pretrained(
            config.checkpoint_id,
            num_labels=len(labels),
            id2label={i: name for i, name in enumerate(labels)},
            label2id={name: i for i, name in enumerate(labels)},
            ignore_mismatched_sizes=True,
        )
    except Exception as exc:
        raise CheckpointUnavailable(
            f"cannot load checkpoint {config.checkpoint_id!r}: {exc}"
        ) from exc
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
        model.config.pad_token_id = tokenizer.pad_token_id
    return tokenizer, model


def _encode(tokenizer, texts: list[str], max_length: int):
    limit = min(max_length, getattr(tokenizer, "model_max_length", max_length))
    return tokenizer(
        texts,
        return_tensors="pt",
        padding="max_length",
        truncation=True,
        max_length=limit,
    )


def _batch_loss(logits, targets, config: TrainConfig):
    import torch

    if config.loss == "cross_entropy":
        return torch.nn.functional.cross_entropy(logits, targets)
    probs = torch.softmax(logits, dim=-1)
    p_t = probs.gather(1, targets.unsqueeze(1)).squeeze(1).clamp(PROB_FLOOR, 1.0)
    return (-((1.0 - p_t) ** config.gamma) * torch.log(p_t)).mean()


def _evaluate(model, encoded, targets: list[int], batch_size: int) -> tuple[float, float]:
    """Validation F1-macro and accuracy of argmax predictions."""
    import torch

    names = canonical_names()
    model.eval()
    preds = []
    with torch.no_grad():
        for start in range(0, len(targets), batch_size):
            batch = {k: v[start : start + batch_size] for k, v in encoded.items()}
            logits = model(**batch).logits
            preds.extend(logits.argmax(dim=-1).tolist())
    truth_names = [names[t] for t in targets]
    pred_names = [names[p] for p in preds]
    rep = metrics.report(truth_names, pred_names)
    return rep.macro_avg.f1, rep.accuracy


def _seed_everything(seed: int) -> None:
    import torch

    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def save_artifact(model, tokenizer, config: TrainConfig, history: list[EpochRecord],
                  run_dir: Path) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(run_dir / "model")
    tokenizer.save_pretrained(run_dir / "model")
    snapshot = {
        "artifact_schema": ARTIFACT_SCHEMA,
        "model_version": config.version_string(),
        "labels": list(canonical_names()),
        "max_length": config.max_length,
        "config": config.to_json_dict(),
    }
    (run_dir / "config.json").write_text(json.dumps(snapshot, indent=2), encoding="utf-8")
    with (run_dir / "history.jsonl").open("w", encoding="utf-8") as fh:
        for record in history:
            fh.write(json.dumps(dataclasses.asdict(record)) + "\n")
    return run_dir


def fine_tune(
    config: TrainConfig,
    train_set: Dataset,
    val_set: Dataset,
    run_dir: str | Path | None = None,
) -> RunResult:
    """Train a 12-way sequence classifier under the early-stopping protocol
    and return the epoch-best model by validation F1-macro."""
    import torch

    overlap = train_set.ids() & val_set.ids()
    if overlap:
        raise ValueError(f"train and validation sets share ids: {sorted(overlap)[:5]}")
    if not len(train_set) or not len(val_set):
        raise EmptyInput("train and validation sets must be nonempty")

    _seed_everything(config.seed)
    tokenizer, model = _load_checkpoint(config)

    if config.lora is not None:
        from .lora import apply_lora

        apply_lora(model, rank=config.lora.rank, alpha=config.lora.alpha)

    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")
    model.to(device)

    train_texts, train_targets = _dataset_texts_targets(train_set)
    val_texts, val_targets = _dataset_texts_targets(val_set)
    train_enc = _encode(tokenizer, train_texts, config.max_length)
    val_enc = _encode(tokenizer, val_texts, config.max_length)
    train_enc = {k: v.to(device) for k, v in train_enc.items()}
    val_enc = {k: v.to(device) for k, v in val_enc.items()}
    targets_tensor = torch.tensor(train_targets, device=device)

    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(
        trainable, lr=config.learning_rate, weight_decay=config.weight_decay
    )
    shuffler = torch.Generator().manual_seed(config.seed)

    stopper = EarlyStopper(config.patience)
    history: list[EpochRecord] = []
    best_state = None
    n = len(train_texts)

    try:
        for epoch in range(1, config.max_epochs + 1):
            t0 = time.perf_counter()
            model.train()
            perm = torch.randperm(n, generator=shuffler)
            losses = []
            for start in range(0, n, config.batch_size):
                idx = perm[start : start + config.batch_size]
                batch = {k: v[idx] for k, v in train_enc.items()}
                optimizer.zero_grad()
                logits = model(**batch).logits
                loss = _batch_loss(logits, targets_tensor[idx], config)
                if not torch.isfinite(loss):
                    raise DivergedLoss(
                        f"non-finite loss at epoch {epoch} (lr {config.learning_rate})"
                    )
                loss.backward()
                optimizer.step()
                losses.append(loss.item())

            f1_macro, acc = _evaluate(model, val_enc, val_targets, config.batch_size)
            record = EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(losses)),
                val_f1_macro=f1_macro,
                val_accuracy=acc,
                wall_seconds=time.perf_counter() - t0,
            )
            history.append(record)
            improved = f1_macro > stopper.best_value
            should_stop = stopper.update(f1_macro)
            if improved:
                best_state = copy.deepcopy(
                    {k: v.detach().cpu() for k, v in model.state_dict().items()}
                )
            logger.info(
                "epoch %d: loss %.4f, val F1-macro %.4f, val acc %.4f",
                epoch, record.train_loss, f1_macro, acc,
            )
            if should_stop:
                break
    except torch.cuda.OutOfMemoryError as exc:
        raise OutOfMemory(
            f"device memory exhausted at batch size {config.batch_size}; "
            "retry with a smaller batch size"
        ) from exc

    if best_state is not None:
        model.load_state_dict(best_state)
    if config.lora is not None:
        from .lora import merge_lora

        merge_lora(model)

    artifact = None
    if run_dir is not None:
        artifact = save_artifact(model, tokenizer, config, history, Path(run_dir))

    result = RunResult(
        config=config,
        history=history,
        best_epoch=stopper.best_index,
        best_val_f1_macro=stopper.best_value,
        model_artifact=artifact,
    )
    result._model = model  # kept for in-process evaluation; artifact is the durable form
    result._tokenizer = tokenizer
    return result


def fine_tune_lora(
    config: TrainConfig,
    train_set: Dataset,
    val_set: Dataset,
    run_dir: str | Path | None = None,
) -> RunResult:
    """fine_tune with low-rank adaptation; config.lora must be set."""
    if config.lora is None:
        raise ValueError("fine_tune_lora requires config.lora")
    return fine_tune(config, train_set, val_set, run_dir=run_dir)


@dataclass
class SweepResult:
    results: list[RunResult]
    stage_winners: dict  # stage name -> RunResult
    best: RunResult


def stage_plan(base: TrainConfig, stage: str, incumbent: TrainConfig) -> list[TrainConfig]:
    """Configurations for one protocol stage, derived from the best
    configuration found so far."""
    if stage == "lr":
        return [
            replace(base, learning_rate=lr, loss="cross_entropy", gamma=None,
                    weight_decay=0.0, lora=None)
            for lr in PROTOCOL_LEARNING_RATES
        ]
    if stage == "gamma":
        return [
            replace(incumbent, loss="focal", gamma=g, lora=None)
            for g in PROTOCOL_GAMMAS
        ]
    if stage == "wd":
        return [
            replace(incumbent, weight_decay=wd, lora=None)
            for wd in PROTOCOL_WEIGHT_DECAYS
        ]
    if stage == "lora":
        return [
            replace(incumbent, lora=LoraSettings(rank=r, alpha=a))
            for r, a in product(PROTOCOL_LORA_VALUES, PROTOCOL_LORA_VALUES)
        ]
    raise ValueError(f"unknown stage {stage!r}")


def sweep(
    base_config: TrainConfig,
    train_set: Dataset,
    val_set: Dataset,
    stages: Sequence[str] = PROTOCOL_STAGES,
    run_root: str | Path | None = None,
) -> SweepResult:
    """Run the staged protocol; each stage's winner (by validation F1-macro,
    earliest on ties) seeds the next stage."""
    unknown = set(stages) - set(PROTOCOL_STAGES)
    if unknown:
        raise ValueError(f"unknown stages: {sorted(unknown)}")

    results: list[RunResult] = []
    stage_winners: dict[str, RunResult] = {}
    incumbent_cfg = base_config
    best: RunResult | None = None

    for stage in stages:
        stage_results = []
        for k, cfg in enumerate(stage_plan(base_config, stage, incumbent_cfg)):
            run_dir = None
            if run_root is not None:
                run_dir = Path(run_root) / f"{stage}-{k:02d}"
            logger.info("sweep stage %s run %d: %s", stage, k, cfg)
            stage_results.append(fine_tune(cfg, train_set, val_set, run_dir=run_dir))
        results.extend(stage_results)
        winner = max(stage_results, key=lambda r: r.best_val_f1_macro)
        stage_winners[stage] = winner
        if best is None or winner.best_val_f1_macro > best.best_val_f1_macro:
            best = winner
            incumbent_cfg = winner.config

    return SweepResult(results=results, stage_winners=stage_winners, best=best)


def select_best(results: Sequence[RunResult], test_set: Dataset | None = None) -> RunResult:
    """Argmax by best validation F1-macro, earliest on ties; when a test set
    is given, the winner is evaluated once on it and the report lands in its
    run directory."""
    if not results:
        raise EmptyInput("no results to select from")
    best = results[0]
    for result in results[1:]:
        if result.best_val_f1_macro > best.best_val_f1_macro:
            best = result
    if test_set is not None:
        best.test_report = evaluate_on(best, test_set)
        if best.model_artifact is not None:
            (Path(best.model_artifact) / "test_report.json").write_text(
                json.dumps(best.test_report.to_json_dict(), indent=2), encoding="utf-8"
            )
    return best


def evaluate_on(result: RunResult, dataset: Dataset) -> metrics.ClassificationReport:
    """Score a finished run's model on a labeled dataset."""
    texts, targets = _dataset_texts_targets(dataset)
    names = canonical_names()
    if getattr(result, "_model", None) is not None:
        preds = _predict_names(result._model, result._tokenizer, texts,
                               result.config.batch_size, result.config.max_length)
    elif result.model_artifact is not None:
        from .inference import load_predictor

        predictor = load_predictor(result.model_artifact)
        preds = [p.label.canonical_name for p in predictor.predict_batch(texts)]
    else:
        raise ValueError("result has neither an in-process model nor an artifact")
    return metrics.report([names[t] for t in targets], preds)


def _predict_names(model, tokenizer, texts, batch_size, max_length) -> list[str]:
    import torch

    names = canonical_names()
    enc = _encode(tokenizer, texts, max_length)
    device = next(model.parameters()).device
    enc = {k: v.to(device) for k, v in enc.items()}
    model.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = {k: v[start : start + batch_size] for k, v in enc.items()}
            logits = model(**batch).logits
            out.extend(names[i] for i in logits.argmax(dim=-1).tolist())
    return out


def render_sweep_grid(results_by_checkpoint: dict[str, Sequence[RunResult]]) -> str:
    """Protocol-shaped text grid: one row per checkpoint, columns for every
    learning rate, gamma, weight decay, and LoRA rank/alpha combination."""
    columns: list[tuple[str, str]] = []
    columns += [("lr", f"{lr:.0e}") for lr in PROTOCOL_LEARNING_RATES]
    columns += [("gamma", f"{g:g}") for g in PROTOCOL_GAMMAS]
    columns += [("wd", f"{wd:g}") for wd in PROTOCOL_WEIGHT_DECAYS]
    columns += [("lora", f"{r}/{a}") for r, a in product(PROTOCOL_LORA_VALUES, PROTOCOL_LORA_VALUES)]

    def column_of(cfg: TrainConfig) -> tuple[str, str]:
        if cfg.lora is not None:
            return ("lora", f"{cfg.lora.rank}/{cfg.lora.alpha}")
        if cfg.weight_decay != 0.0:
            return ("wd", f"{cfg.weight_decay:g}")
        if cfg.loss == "focal":
            return ("gamma", f"{cfg.gamma:g}")
        return ("lr", f"{cfg.learning_rate:.0e}")

    name_w = max(len(n) for n in results_by_checkpoint) + 2
    header = " " * name_w + "".join(f"{kind} {val:<8}"[:12].ljust(12) for kind, val in columns)
    lines = [header]
    for checkpoint, results in results_by_checkpoint.items():
        cells = {col: "" for col in columns}
        for result in results:
            col = column_of(result.config)
            if col in cells:
                cells[col] = f"{result.best_val_f1_macro:.2f}"
        lines.append(f"{checkpoint:<{name_w}}" + "".join(f"{cells[c]:<12}" for c in columns))
    return "\n".join(lines)
