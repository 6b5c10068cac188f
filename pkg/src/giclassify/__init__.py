"""Gastrointestinal image classification toolkit: global image descriptors,
SimpleLogistic / logistic-model-tree classifiers, late probability fusion,
and the matching evaluation metrics."""

__version__ = "0.1.0"

from .dataset import (CLASS_LETTERS, CLASS_NAMES, N_CLASSES, DatasetIndex,
                      SplitPair, apply_out_of_patient_policy, scan_dataset,
                      stratified_split)
from .descriptors import FEATURE_LENGTH, SEGMENTS, extract_all
from .fusion import (BranchOutputs, average_fusion, build_fusion_mlp,
                     import_branch_probs, train_dual_branch, train_fusion)
from .imaging import AugmentSpec, ImageTensor, augment, convert, decode
from .metrics import MetricsRow, confusion_matrix, fps, mcc, micro_metrics
from .classifiers import (ClassifierConfig, LMTModel, SimpleLogisticModel,
                          predict_proba, train_lmt, train_simple_logistic)

__all__ = [
    "CLASS_LETTERS", "CLASS_NAMES", "N_CLASSES", "FEATURE_LENGTH", "SEGMENTS",
    "AugmentSpec", "BranchOutputs", "ClassifierConfig", "DatasetIndex",
    "ImageTensor", "LMTModel", "MetricsRow", "SimpleLogisticModel",
    "SplitPair", "apply_out_of_patient_policy", "augment", "average_fusion",
    "build_fusion_mlp", "confusion_matrix", "convert", "decode",
    "extract_all", "fps", "import_branch_probs", "mcc", "micro_metrics",
    "predict_proba", "scan_dataset", "stratified_split", "train_dual_branch",
    "train_fusion", "train_lmt", "train_simple_logistic",
]
