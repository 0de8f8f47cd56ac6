"""Consensus labeling, clinical-rule evaluation and Grad-CAM agreement
statistics for dermoscopic basal cell carcinoma patterns."""

from .consensus import ConsensusResult, EmConfig, infer_sr, loglikelihood, majority_vote
from .core import (
    AnnotationDataset,
    AnnotationRecord,
    DiagnosisGroup,
    Pattern,
    PatternVector,
    validate_dataset,
)
from .focal import FocalLossParams, focal_loss, focal_loss_grad
from .folds import FoldAssignment, fold_balance_report, stratified_kfold
from .metrics import ConfusionCounts, confusion, evaluate, fold_aggregate, metrics_of, xai_group_eval
from .rules import Diagnosis, binary_of, explain, group_of
from .saliency import (
    SaliencyStats,
    batch_saliency,
    conditional_pdfs,
    dice_jaccard,
    normalize_heatmap,
    pdf_intersection,
    region_stats,
)

__all__ = [
    "AnnotationDataset",
    "AnnotationRecord",
    "ConfusionCounts",
    "ConsensusResult",
    "Diagnosis",
    "DiagnosisGroup",
    "EmConfig",
    "FocalLossParams",
    "FoldAssignment",
    "Pattern",
    "PatternVector",
    "SaliencyStats",
    "batch_saliency",
    "binary_of",
    "conditional_pdfs",
    "confusion",
    "dice_jaccard",
    "evaluate",
    "explain",
    "focal_loss",
    "focal_loss_grad",
    "fold_aggregate",
    "fold_balance_report",
    "group_of",
    "infer_sr",
    "loglikelihood",
    "majority_vote",
    "metrics_of",
    "normalize_heatmap",
    "pdf_intersection",
    "region_stats",
    "stratified_kfold",
    "validate_dataset",
    "xai_group_eval",
]
