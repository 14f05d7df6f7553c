"""Build a self-contained demo artifact for the inference service.

Seeds a small local checkpoint, trains it on a 64-sample balanced subset of
the synthetic corpus (which includes the bundled worked examples), and saves
the run directory. Everything is offline and seeded.

Usage: python scripts/make_demo_artifact.py [out_dir]
"""

import logging
import sys
from pathlib import Path

from flicc.checkpoints import default_seed_texts, seed_checkpoint
from flicc.corpus import Dataset
from flicc.synthetic import balanced_subset, synthetic_corpus, vocabulary_texts
from flicc.taxonomy import canonical_names
from flicc.training import TrainConfig, evaluate_on, fine_tune

logging.basicConfig(level=logging.INFO, format="%(message)s")


def main(out_dir: str = "artifacts/demo") -> None:
    out = Path(out_dir)
    if (out / "config.json").is_file():
        print(f"artifact already present at {out}")
        return
    checkpoint = seed_checkpoint(out.parent / "checkpoint",
                                 default_seed_texts(vocabulary_texts()), seed=0)
    corpus = synthetic_corpus(label_counts={n: 12 for n in canonical_names()}, seed=5)
    train = balanced_subset(corpus, 64)
    rest = Dataset(samples=tuple(s for s in corpus.samples if s.id not in train.ids()))
    val = balanced_subset(rest, 36)
    config = TrainConfig(checkpoint_id=str(checkpoint), learning_rate=5.0e-4,
                         batch_size=16, max_epochs=30, patience=10, seed=0, max_length=64)
    result = fine_tune(config, train, val, run_dir=out)
    train_f1 = evaluate_on(result, train).macro_avg.f1
    print(f"artifact at {out}: best val F1-macro {result.best_val_f1_macro:.3f}, "
          f"train F1-macro {train_f1:.3f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
