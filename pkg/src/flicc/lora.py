"""Low-rank adaptation of attention projection layers.

Wraps selected ``nn.Linear`` modules with trainable rank-decomposition
matrices: the adapted layer computes ``Wx + (alpha/rank) * B(Ax)`` with the
base weight ``W`` frozen, ``A`` Gaussian-initialized and ``B`` zero-initialized
so adaptation starts as the identity. ``merge_lora`` folds the update back
into the base weights, after which the model is a plain checkpoint again.
"""

from __future__ import annotations

import math
import re

import torch
from torch import nn

from .errors import UnsupportedCheckpoint

# Attention projection layer names across the supported architectures
# (BERT/DeBERTa: query/value; GPT-2 fused attn handled separately; OPT/BLOOM:
# q_proj/v_proj or fused query_key_value).
DEFAULT_TARGET_PATTERNS = (
    r"\bquery\b",
    r"\bvalue\b",
    r"\bq_proj\b",
    r"\bv_proj\b",
    r"\bquery_key_value\b",
    r"\bin_proj\b",
    r"\bc_attn\b",
)


class LoraLinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: int):
        super().__init__()
        self.base = base
        self.rank = rank
        self.alpha = alpha
        self.scaling = alpha / rank
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))
        self.base.weight.requires_grad_(False)
        if self.base.bias is not None:
            self.base.bias.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.base(x) + self.scaling * nn.functional.linear(
            nn.functional.linear(x, self.lora_a), self.lora_b
        )

    def merged_weight(self) -> torch.Tensor:
        return self.base.weight + self.scaling * (self.lora_b @ self.lora_a)


def _classifier_module_names(model: nn.Module) -> set[str]:
    names = set()
    for name, _ in model.named_modules():
        head = name.split(".")[0]
        if head in ("classifier", "score", "logits_proj", "pooler"):
            names.add(name)
    return names


def apply_lora(
    model: nn.Module,
    rank: int,
    alpha: int,
    target_patterns: tuple[str, ...] = DEFAULT_TARGET_PATTERNS,
) -> list[str]:
    """Freeze the model, wrap matching attention projections with LoRA
    layers, and leave the classification head trainable. Returns the names of
    the adapted modules."""
    for param in model.parameters():
        param.requires_grad_(False)

    compiled = [re.compile(p) for p in target_patterns]
    head_names = _classifier_module_names(model)
    adapted = []
    for name, module in list(model.named_modules()):
        if not isinstance(module, nn.Linear):
            continue
        if any(name == h or name.startswith(h + ".") for h in head_names):
            continue
        if not any(p.search(name) for p in compiled):
            continue
        parent_name, _, child_name = name.rpartition(".")
        parent = model.get_submodule(parent_name) if parent_name else model
        setattr(parent, child_name, LoraLinear(module, rank=rank, alpha=alpha))
        adapted.append(name)

    if not adapted:
        raise UnsupportedCheckpoint(
            "checkpoint exposes no attention projection layers matching "
            f"{target_patterns}"
        )

    for head in head_names:
        for param in model.get_submodule(head).parameters():
            param.requires_grad_(True)
    return adapted


def merge_lora(model: nn.Module) -> nn.Module:
    """Fold every LoRA update into its base weight and restore plain Linear
    modules. The merged model computes the same function as the adapted one."""
    for name, module in list(model.named_modules()):
        if isinstance(module, LoraLinear):
            with torch.no_grad():
                module.base.weight.copy_(module.merged_weight())
            parent_name, _, child_name = name.rpartition(".")
            parent = model.get_submodule(parent_name) if parent_name else model
            setattr(parent, child_name, module.base)
    return model


def trainable_parameter_ratio(model: nn.Module) -> float:
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    total = sum(p.numel() for p in model.parameters())
    return trainable / total
