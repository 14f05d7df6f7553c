import math
from dataclasses import replace

import numpy as np
import pytest

from flicc.corpus import Dataset
from flicc.errors import EmptyInput, InvalidSimplex, UnsupportedCheckpoint
from flicc.synthetic import balanced_subset, synthetic_corpus
from flicc.taxonomy import canonical_names
from flicc.training import (
    PROTOCOL_GAMMAS,
    PROTOCOL_LEARNING_RATES,
    PROTOCOL_WEIGHT_DECAYS,
    EarlyStopper,
    EpochRecord,
    LoraSettings,
    RunResult,
    TrainConfig,
    fine_tune,
    focal_loss,
    render_sweep_grid,
    select_best,
    stage_plan,
    sweep,
)


def random_simplex(rng, k=12):
    x = rng.random(k) + 1e-3
    return x / x.sum()


class TestFocalLoss:
    def test_gamma_zero_equals_cross_entropy(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            probs = random_simplex(rng)
            t = int(rng.integers(0, 12))
            assert focal_loss(probs, t, gamma=0.0) == pytest.approx(-math.log(probs[t]), abs=1e-9)

    def test_hand_arithmetic(self):
        # p_t = 0.9, gamma = 2: 0.01 * -log(0.9) = 0.00105361
        probs = [0.9] + [0.1 / 11] * 11
        assert focal_loss(probs, 0, gamma=2.0) == pytest.approx(0.00105361, abs=1e-8)

    def test_certain_prediction_is_free(self):
        probs = [1.0] + [0.0] * 11
        assert focal_loss(probs, 0, gamma=2.0) == 0.0

    def test_monotone_decreasing_in_p_t(self):
        for gamma in (0.0, 2.0, 8.0):
            values = []
            for p in np.linspace(0.05, 0.95, 19):
                probs = [p] + [(1 - p) / 11] * 11
                values.append(focal_loss(probs, 0, gamma))
            assert all(a > b for a, b in zip(values, values[1:]))
            assert all(v >= 0 for v in values)

    def test_invalid_simplex(self):
        with pytest.raises(InvalidSimplex):
            focal_loss([0.5, 0.4], 0, gamma=2.0)
        with pytest.raises(InvalidSimplex):
            focal_loss([0.5, 0.5], 3, gamma=2.0)

    def test_gradient_matches_finite_differences(self):
        import torch

        from flicc.training import _batch_loss

        torch.manual_seed(0)
        config = TrainConfig(checkpoint_id="unused", loss="focal", gamma=2.0)
        logits = torch.randn(4, 12, dtype=torch.float64, requires_grad=True)
        targets = torch.tensor([0, 3, 7, 11])
        loss = _batch_loss(logits, targets, config)
        loss.backward()
        eps = 1e-6
        for i, j in [(0, 0), (1, 3), (2, 5), (3, 11)]:
            bumped = logits.detach().clone()
            bumped[i, j] += eps
            up = _batch_loss(bumped, targets, config).item()
            bumped[i, j] -= 2 * eps
            down = _batch_loss(bumped, targets, config).item()
            numeric = (up - down) / (2 * eps)
            analytic = logits.grad[i, j].item()
            assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-8)


class TestEarlyStopper:
    def test_reference_sequence(self):
        stopper = EarlyStopper(patience=3)
        outcomes = [stopper.update(v) for v in (0.50, 0.60, 0.59, 0.58, 0.57)]
        assert outcomes == [False, False, False, False, True]
        assert stopper.best_index == 2
        assert stopper.best_value == 0.60

    def test_never_stops_before_patience_plus_one(self):
        stopper = EarlyStopper(patience=3)
        assert not any(stopper.update(v) for v in (0.5, 0.4, 0.3))
        assert stopper.update(0.2)

    def test_strict_improvement_required(self):
        stopper = EarlyStopper(patience=2)
        assert not stopper.update(0.5)
        assert not stopper.update(0.5)  # equal is not improvement
        assert stopper.update(0.5)
        assert stopper.best_index == 1


class TestConfig:
    def test_focal_requires_gamma(self):
        with pytest.raises(ValueError):
            TrainConfig(checkpoint_id="x", loss="focal")

    def test_unknown_loss(self):
        with pytest.raises(ValueError):
            TrainConfig(checkpoint_id="x", loss="hinge")

    def test_round_trip(self):
        config = TrainConfig(checkpoint_id="x", loss="focal", gamma=4.0,
                             lora=LoraSettings(rank=8, alpha=16))
        assert TrainConfig.from_json_dict(config.to_json_dict()) == config


class TestStagePlan:
    BASE = TrainConfig(checkpoint_id="ckpt")

    def test_lr_stage(self):
        configs = stage_plan(self.BASE, "lr", self.BASE)
        assert [c.learning_rate for c in configs] == list(PROTOCOL_LEARNING_RATES)
        assert all(c.loss == "cross_entropy" and c.weight_decay == 0.0 for c in configs)

    def test_gamma_stage_inherits_winner(self):
        incumbent = replace(self.BASE, learning_rate=5e-5)
        configs = stage_plan(self.BASE, "gamma", incumbent)
        assert [c.gamma for c in configs] == list(PROTOCOL_GAMMAS)
        assert all(c.loss == "focal" and c.learning_rate == 5e-5 for c in configs)

    def test_wd_stage(self):
        incumbent = replace(self.BASE, learning_rate=1e-5, loss="focal", gamma=4.0)
        configs = stage_plan(self.BASE, "wd", incumbent)
        assert [c.weight_decay for c in configs] == list(PROTOCOL_WEIGHT_DECAYS)
        assert all(c.loss == "focal" and c.gamma == 4.0 for c in configs)

    def test_lora_stage(self):
        configs = stage_plan(self.BASE, "lora", self.BASE)
        assert [(c.lora.rank, c.lora.alpha) for c in configs] == [
            (8, 8), (8, 16), (16, 8), (16, 16)]


def make_result(checkpoint, f1, **cfg_kwargs):
    config = TrainConfig(checkpoint_id=checkpoint, **cfg_kwargs)
    history = [EpochRecord(1, 1.0, f1, f1, 0.1)]
    return RunResult(config=config, history=history, best_epoch=1, best_val_f1_macro=f1)


# Published grid scores: checkpoint -> (lr scores, gamma scores, wd scores, lora scores)
PUBLISHED_GRID = {
    "bert-base-uncased": ((0.56, 0.65, 0.58), (0.64, 0.61, 0.63, 0.56), (0.64, 0.62), (0.36, 0.37)),
    "roberta-large": ((0.66, 0.68, 0.02), (0.01, 0.00, 0.69, 0.00), (0.01, 0.00), (0.60, 0.64)),
    "gpt2": ((0.42, 0.56, 0.47), (0.51, 0.45, 0.46, 0.46), (0.57, 0.50), (0.10, 0.30)),
    "bigscience/bloom-560m": ((0.54, 0.54, 0.33), (0.48, 0.50, 0.56, 0.52), (0.46, 0.51), (0.44, 0.44)),
    "facebook/opt-350m": ((0.23, 0.12, 0.02), (0.20, 0.23, 0.22, 0.22), (0.21, 0.22), (0.07, 0.07)),
    "EleutherAI/gpt-neo-1.3B": ((0.44, 0.65, 0.58), (0.44, 0.05, 0.50, 0.49), (0.57, 0.57), (0.33, 0.33)),
    "microsoft/deberta-base": ((0.67, 0.63, 0.62), (0.64, 0.63, 0.65, 0.56), (0.69, 0.67), (0.02, 0.02)),
    "microsoft/deberta-base-v2-xlarge": ((0.67, 0.41, 0.02), (0.70, 0.73, 0.63, 0.69), (0.73, 0.71), (0.07, 0.38)),
}


def published_results(checkpoint):
    lr_scores, gamma_scores, wd_scores, lora_scores = PUBLISHED_GRID[checkpoint]
    results = []
    for lr, f1 in zip(PROTOCOL_LEARNING_RATES, lr_scores):
        results.append(make_result(checkpoint, f1, learning_rate=lr))
    for gamma, f1 in zip(PROTOCOL_GAMMAS, gamma_scores):
        results.append(make_result(checkpoint, f1, loss="focal", gamma=gamma))
    for wd, f1 in zip(PROTOCOL_WEIGHT_DECAYS, wd_scores):
        results.append(make_result(checkpoint, f1, weight_decay=wd))
    for (rank, alpha), f1 in zip([(8, 8), (16, 16)], lora_scores):
        results.append(make_result(checkpoint, f1, lora=LoraSettings(rank, alpha)))
    return results


class TestSelectBest:
    def test_published_grid_winner(self):
        results = [r for ckpt in PUBLISHED_GRID for r in published_results(ckpt)]
        best = select_best(results)
        assert best.config.checkpoint_id == "microsoft/deberta-base-v2-xlarge"
        assert best.best_val_f1_macro == 0.73

    def test_single_result(self):
        result = make_result("x", 0.5)
        assert select_best([result]) is result

    def test_tie_keeps_first(self):
        a, b = make_result("x", 0.70), make_result("y", 0.70)
        assert select_best([a, b]) is a

    def test_empty(self):
        with pytest.raises(EmptyInput):
            select_best([])


class TestSweepSequencing:
    def test_stage_winners_seed_later_stages(self, monkeypatch):
        # deterministic fake trainer: lr 5e-5 wins stage 1, gamma 4 wins stage 2
        scores = {(5e-5, "cross_entropy", None, 0.0): 0.60,
                  (1e-5, "cross_entropy", None, 0.0): 0.50,
                  (1e-4, "cross_entropy", None, 0.0): 0.40}

        def fake_fine_tune(config, train_set, val_set, run_dir=None):
            key = (config.learning_rate, config.loss, config.gamma, config.weight_decay)
            f1 = scores.get(key)
            if f1 is None:
                f1 = 0.65 if config.gamma == 4.0 and config.weight_decay == 0.0 else 0.30
            return make_result(config.checkpoint_id, f1,
                               learning_rate=config.learning_rate, loss=config.loss,
                               gamma=config.gamma, weight_decay=config.weight_decay,
                               lora=config.lora)

        import flicc.training as training_module
        monkeypatch.setattr(training_module, "fine_tune", fake_fine_tune)

        base = TrainConfig(checkpoint_id="ckpt")
        dummy = Dataset(samples=())
        result = sweep(base, dummy, dummy, stages=("lr", "gamma", "wd"))
        assert result.stage_winners["lr"].config.learning_rate == 5e-5
        assert all(r.config.learning_rate == 5e-5 for r in result.results[3:])
        assert result.stage_winners["gamma"].config.gamma == 4.0
        # stage 3 runs inherit the focal winner
        wd_configs = [r.config for r in result.results[7:]]
        assert [c.weight_decay for c in wd_configs] == [0.01, 0.1]
        assert all(c.gamma == 4.0 for c in wd_configs)
        assert result.best.best_val_f1_macro == 0.65

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError):
            sweep(TrainConfig(checkpoint_id="x"), Dataset(samples=()), Dataset(samples=()),
                  stages=("lr", "nope"))


class TestRenderGrid:
    def test_grid_contains_scores(self):
        grid = render_sweep_grid({"microsoft/deberta-base-v2-xlarge":
                                  published_results("microsoft/deberta-base-v2-xlarge")})
        assert "0.73" in grid
        assert "microsoft/deberta-base-v2-xlarge" in grid


class TestLora:
    @pytest.fixture(scope="class")
    def tiny_model(self, tiny_checkpoint):
        from transformers import AutoModelForSequenceClassification

        return AutoModelForSequenceClassification.from_pretrained(tiny_checkpoint)

    def test_trainable_ratio_below_five_percent(self, tiny_checkpoint):
        from transformers import AutoModelForSequenceClassification

        from flicc.lora import apply_lora, trainable_parameter_ratio

        model = AutoModelForSequenceClassification.from_pretrained(tiny_checkpoint)
        adapted = apply_lora(model, rank=8, alpha=8)
        assert adapted  # query/value projections found
        assert trainable_parameter_ratio(model) < 0.05

    def test_rank_16_has_more_trainable_parameters(self, tiny_checkpoint):
        from transformers import AutoModelForSequenceClassification

        from flicc.lora import apply_lora

        def lora_params(rank):
            model = AutoModelForSequenceClassification.from_pretrained(tiny_checkpoint)
            apply_lora(model, rank=rank, alpha=rank)
            return sum(p.numel() for n, p in model.named_parameters()
                       if p.requires_grad and "lora" in n)

        assert lora_params(16) > lora_params(8)

    def test_merge_equivalence(self, tiny_checkpoint):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        from flicc.lora import apply_lora, merge_lora

        torch.manual_seed(1)
        model = AutoModelForSequenceClassification.from_pretrained(tiny_checkpoint)
        tokenizer = AutoTokenizer.from_pretrained(tiny_checkpoint)
        apply_lora(model, rank=8, alpha=16)
        # make the adapters nonzero so the merge actually moves weights
        with torch.no_grad():
            for name, param in model.named_parameters():
                if "lora_b" in name:
                    param.normal_(std=0.02)
        enc = tokenizer(["Sea ice is setting records this year."], return_tensors="pt",
                        padding="max_length", truncation=True, max_length=32)
        model.eval()
        with torch.no_grad():
            adapted_logits = model(**enc).logits
        merge_lora(model)
        with torch.no_grad():
            merged_logits = model(**enc).logits
        assert torch.allclose(adapted_logits, merged_logits, atol=1e-4)
        assert not any("lora" in name for name, _ in model.named_parameters())

    def test_unsupported_checkpoint(self):
        import torch

        from flicc.lora import apply_lora

        mlp = torch.nn.Sequential(torch.nn.Linear(4, 4), torch.nn.ReLU(), torch.nn.Linear(4, 2))
        with pytest.raises(UnsupportedCheckpoint):
            apply_lora(mlp, rank=4, alpha=4)


class TestFineTune:
    @pytest.fixture(scope="class")
    def micro_splits(self):
        corpus = synthetic_corpus(label_counts={n: 4 for n in canonical_names()}, seed=9)
        train = balanced_subset(corpus, 24)
        rest = Dataset(samples=tuple(s for s in corpus.samples if s.id not in train.ids()))
        val = balanced_subset(rest, 12)
        return train, val

    def test_early_stop_sequence_drives_loop(self, tiny_checkpoint, micro_splits, monkeypatch):
        import flicc.training as training_module

        sequence = iter([0.50, 0.60, 0.59, 0.58, 0.57, 0.99])
        monkeypatch.setattr(training_module, "_evaluate",
                            lambda *args, **kwargs: (next(sequence), 0.0))
        train, val = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint, learning_rate=1e-4,
                             batch_size=16, max_epochs=30, patience=3, seed=0, max_length=32)
        result = fine_tune(config, train, val)
        assert len(result.history) == 5  # stopped after epoch 5
        assert result.best_epoch == 2
        assert result.best_val_f1_macro == 0.60

    def test_seeded_runs_reproduce_history(self, tiny_checkpoint, micro_splits):
        train, val = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint, learning_rate=1e-4,
                             batch_size=16, max_epochs=3, patience=3, seed=11, max_length=32)
        a = fine_tune(config, train, val)
        b = fine_tune(config, train, val)
        key = lambda h: [(r.epoch, r.train_loss, r.val_f1_macro, r.val_accuracy) for r in h]
        assert key(a.history) == key(b.history)
        assert a.best_epoch == b.best_epoch

    def test_overlapping_splits_rejected(self, tiny_checkpoint, micro_splits):
        train, _ = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint)
        with pytest.raises(ValueError):
            fine_tune(config, train, train)

    def test_checkpoint_unavailable(self, micro_splits, tmp_path):
        from flicc.errors import CheckpointUnavailable

        train, val = micro_splits
        config = TrainConfig(checkpoint_id=str(tmp_path / "missing"), max_epochs=1)
        with pytest.raises(CheckpointUnavailable):
            fine_tune(config, train, val)

    def test_diverged_loss_reported(self, tiny_checkpoint, micro_splits):
        from flicc.errors import DivergedLoss

        train, val = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint, learning_rate=1e12,
                             batch_size=16, max_epochs=5, patience=3, seed=0, max_length=32)
        with pytest.raises(DivergedLoss):
            fine_tune(config, train, val)

    def test_select_best_writes_test_report_to_run_dir(self, tiny_checkpoint, micro_splits,
                                                       tmp_path):
        import json

        from flicc.training import select_best

        train, val = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint, learning_rate=1e-4,
                             batch_size=16, max_epochs=2, patience=3, seed=4, max_length=32)
        result = fine_tune(config, train, val, run_dir=tmp_path / "run")
        best = select_best([result], test_set=val)
        assert best.test_report is not None
        on_disk = json.loads((tmp_path / "run" / "test_report.json").read_text())
        assert on_disk == best.test_report.to_json_dict()

    def test_history_epochs_strictly_increasing(self, tiny_checkpoint, micro_splits):
        train, val = micro_splits
        config = TrainConfig(checkpoint_id=tiny_checkpoint, learning_rate=1e-4,
                             batch_size=16, max_epochs=2, patience=3, seed=2, max_length=32)
        result = fine_tune(config, train, val)
        epochs = [r.epoch for r in result.history]
        assert epochs == sorted(set(epochs)) and epochs[0] == 1
        assert all(0.0 <= r.val_f1_macro <= 1.0 for r in result.history)
