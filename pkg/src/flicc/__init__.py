"""Fallacy-detection workbench for climate misinformation."""

__version__ = "0.1.0"

from .taxonomy import (  # noqa: F401
    CardsClaim,
    FallacyLabel,
    FallacyType,
    cards_claims,
    canonical_names,
    fallacy_labels,
    label_info,
    parse_label,
)
from .corpus import (  # noqa: F401
    Dataset,
    Sample,
    Split,
    bundled_deconstructions,
    cross_tabulate,
    load_dataset,
    save_dataset,
    split_summary,
    stratified_split,
)
from .metrics import (  # noqa: F401
    ClassificationReport,
    ConfusionMatrix,
    MISS,
    accuracy,
    confusion,
    per_class_scores,
    report,
    row_normalize,
    zero_r,
)
