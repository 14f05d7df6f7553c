"""Self-contained local checkpoints.

The training and curation modules accept any checkpoint exposing the standard
sequence-classification/encoder interface, referenced by hub id or directory
path. ``seed_checkpoint`` builds a small bidirectional encoder from scratch
(word-level vocabulary trained on the given texts, randomly initialized
weights, fixed seed) so the full pipeline can run on machines with no model
hub access. Published checkpoint ids keep working wherever the hub is
reachable.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

from .taxonomy import canonical_names

# Checkpoint ids used by the reference experiments; any of these (or a local
# directory) is a valid TrainConfig.checkpoint_id.
REGISTRY = (
    "bert-base-uncased",
    "roberta-large",
    "gpt2",
    "bigscience/bloom-560m",
    "facebook/opt-350m",
    "EleutherAI/gpt-neo-1.3B",
    "microsoft/deberta-base",
    "microsoft/deberta-base-v2-xlarge",
)


def quiet_transformers() -> None:
    import transformers

    transformers.logging.set_verbosity_error()
    try:
        transformers.logging.disable_progress_bar()
    except AttributeError:
        pass


def seed_checkpoint(
    out_dir: str | Path,
    texts: Iterable[str],
    seed: int = 0,
    hidden_size: int = 128,
    num_hidden_layers: int = 2,
    num_attention_heads: int = 4,
    intermediate_size: int = 256,
    max_position_embeddings: int = 128,
) -> Path:
    """Build and save a small BERT-architecture checkpoint with a word-level
    vocabulary trained on ``texts``. Returns the checkpoint directory."""
    import torch
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors, trainers
    from transformers import BertConfig, BertForSequenceClassification, PreTrainedTokenizerFast

    quiet_transformers()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tokenizer = Tokenizer(models.WordLevel(unk_token="[UNK]"))
    tokenizer.normalizer = normalizers.Sequence(
        [normalizers.NFD(), normalizers.Lowercase(), normalizers.StripAccents()]
    )
    tokenizer.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.WordLevelTrainer(
        special_tokens=["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"], min_frequency=1
    )
    tokenizer.train_from_iterator(texts, trainer)
    tokenizer.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[
            ("[CLS]", tokenizer.token_to_id("[CLS]")),
            ("[SEP]", tokenizer.token_to_id("[SEP]")),
        ],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token="[PAD]",
        unk_token="[UNK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
        model_max_length=max_position_embeddings,
    )

    labels = canonical_names()
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=fast.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_hidden_layers,
        num_attention_heads=num_attention_heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=max_position_embeddings,
        num_labels=len(labels),
        id2label={i: name for i, name in enumerate(labels)},
        label2id={name: i for i, name in enumerate(labels)},
        pad_token_id=fast.pad_token_id,
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(out_dir)
    fast.save_pretrained(out_dir)
    return out_dir


def default_seed_texts(extra: Sequence[str] = ()) -> list[str]:
    """Vocabulary sources for a seeded checkpoint: the bundled examples plus
    taxonomy definitions plus any caller-provided texts."""
    from .corpus import bundled_deconstructions
    from .taxonomy import fallacy_labels

    texts = [s.text for s in bundled_deconstructions()]
    texts += [l.definition for l in fallacy_labels()]
    texts += [l.argument_structure for l in fallacy_labels() if l.argument_structure]
    texts += list(extra)
    return texts
