"""Fairness-by-explicability boosting: SHAPSqueeze and SHAPEnforce."""
from .adaboost import EnforceConfig, ShapEnforceModel, train_shapenforce
from .audit import AuditorResult, FairnessReport, audit, build_report
from .data import Dataset, SyntheticConfig, generate_synthetic
from .gbdt import GbdtConfig, GbdtModel, train_shapsqueeze
from .surrogate import LinearSurrogate

__version__ = "0.1.0"

__all__ = [
    "AuditorResult",
    "Dataset",
    "EnforceConfig",
    "FairnessReport",
    "GbdtConfig",
    "GbdtModel",
    "LinearSurrogate",
    "ShapEnforceModel",
    "SyntheticConfig",
    "audit",
    "build_report",
    "generate_synthetic",
    "train_shapenforce",
    "train_shapsqueeze",
]
