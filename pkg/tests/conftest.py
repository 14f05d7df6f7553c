import pytest

from flicc.checkpoints import default_seed_texts, seed_checkpoint
from flicc.corpus import Dataset
from flicc.synthetic import balanced_subset, synthetic_corpus, vocabulary_texts
from flicc.taxonomy import canonical_names

# Texts planted by curation tests; included in the checkpoint vocabulary so
# their tokens are not all unknowns.
PLANTED_TEXTS = [
    "Global warming is a hoax invented to scare the public",
    "Global warming is a hoax invented to scare the public!",
    "GLOBAL WARMING IS A HOAX INVENTED TO SCARE THE PUBLIC",
]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """Small self-contained checkpoint covering the synthetic vocabulary."""
    out = tmp_path_factory.mktemp("checkpoint")
    texts = default_seed_texts(vocabulary_texts() + PLANTED_TEXTS)
    return str(seed_checkpoint(out, texts, seed=0))


@pytest.fixture(scope="session")
def smoke_corpus():
    return synthetic_corpus(label_counts={n: 12 for n in canonical_names()}, seed=5)


@pytest.fixture(scope="session")
def smoke_splits(smoke_corpus):
    train = balanced_subset(smoke_corpus, 64)
    rest = Dataset(
        samples=tuple(s for s in smoke_corpus.samples if s.id not in train.ids()),
        provenance=smoke_corpus.provenance,
    )
    val = balanced_subset(rest, 36)
    return train, val


@pytest.fixture(scope="session")
def smoke_run(tiny_checkpoint, smoke_splits, tmp_path_factory):
    """One real fine-tuning run on the 64-sample balanced subset; reused by
    inference, service, and acceptance tests."""
    from flicc.training import TrainConfig, fine_tune

    train, val = smoke_splits
    # lr above the protocol grid and a longer patience: a freshly seeded
    # small checkpoint needs bigger steps to overfit 64 samples in 30 epochs
    config = TrainConfig(
        checkpoint_id=tiny_checkpoint,
        learning_rate=5.0e-4,
        batch_size=16,
        max_epochs=30,
        patience=10,
        seed=0,
        max_length=64,
    )
    run_dir = tmp_path_factory.mktemp("smoke-run")
    result = fine_tune(config, train, val, run_dir=run_dir)
    return result, train, val


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE_OUTCOMES[report.nodeid.split("::")[-1]] = report.outcome


_ACCEPTANCE_OUTCOMES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_OUTCOMES.items():
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
