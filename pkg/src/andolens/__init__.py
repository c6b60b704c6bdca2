"""Exact AND-OR interaction analysis of small classifiers.

The pipeline: train a small feedforward classifier, evaluate its log-odds
confidence on every masked variant of a sample, decompose that table exactly
into AND/OR interaction effects, sparsify the decomposition, and track how
many interactions are salient and how well they transfer to a baseline model
across training checkpoints.
"""

__version__ = "0.1.0"

from .dynamics import DynamicsRecord, SweepConfig, emit, loss_gap, sweep
from .interactions import (
    InteractionDecomposition,
    decompose,
    mobius_and,
    mobius_and_bruteforce,
    mobius_or,
    mobius_or_bruteforce,
    mobius_subset,
    reconstruct,
    reconstruct_all,
    split_outputs,
    zeta_subset,
)
from .masking import (
    MaskedOutputTable,
    SubsetMask,
    compute_baseline,
    mask_input,
    masked_output_table,
)
from .model import (
    CheckpointFormatError,
    Dataset,
    Model,
    ModelSpec,
    cross_entropy,
    init_model,
    load_checkpoint,
    load_dataset_csv,
    predict_proba,
    save_checkpoint,
    save_dataset_csv,
    score,
    train,
)
from .saliency import (
    GeneralizationReport,
    MatchedInteraction,
    SalientInteraction,
    ThresholdPolicy,
    aggregate_orders,
    extract_salient,
    match_generalization,
    salient_approximation_error,
)
from .sparsify import SparsifyConfig, SparsifyResult, objective, sparsify
from .synthetic import (
    PlantedSpec,
    PlantedTerm,
    gen_dataset,
    planted_score,
    planted_table,
    random_planted_spec,
)

__all__ = [
    "CheckpointFormatError",
    "Dataset",
    "DynamicsRecord",
    "GeneralizationReport",
    "InteractionDecomposition",
    "MaskedOutputTable",
    "MatchedInteraction",
    "Model",
    "ModelSpec",
    "PlantedSpec",
    "PlantedTerm",
    "SalientInteraction",
    "SparsifyConfig",
    "SparsifyResult",
    "SubsetMask",
    "SweepConfig",
    "ThresholdPolicy",
    "aggregate_orders",
    "compute_baseline",
    "cross_entropy",
    "decompose",
    "emit",
    "extract_salient",
    "gen_dataset",
    "init_model",
    "load_checkpoint",
    "load_dataset_csv",
    "loss_gap",
    "mask_input",
    "masked_output_table",
    "match_generalization",
    "mobius_and",
    "mobius_and_bruteforce",
    "mobius_or",
    "mobius_or_bruteforce",
    "mobius_subset",
    "objective",
    "planted_score",
    "planted_table",
    "predict_proba",
    "random_planted_spec",
    "reconstruct",
    "reconstruct_all",
    "salient_approximation_error",
    "save_checkpoint",
    "save_dataset_csv",
    "score",
    "split_outputs",
    "sparsify",
    "sweep",
    "train",
    "zeta_subset",
]
