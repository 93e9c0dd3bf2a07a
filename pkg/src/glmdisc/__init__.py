"""Joint learning of feature quantizations and a logistic regression scorecard."""

__version__ = "0.1.0"

from .data import Dataset, FeatureKind, Schema, SplitSpec, load_csv, load_schema, save_csv, split
from .glm import FitResult, LogisticParams, bic, fit_mle, loglik, predict_proba
from .quantization import (
    CategoricalQuantizer,
    ContinuousQuantizer,
    Quantization,
    compact,
    order,
    quantize_dataset,
)
from .trainer import GlmdiscModel, TrainConfig, emit_trace, predict, train

__all__ = [
    "CategoricalQuantizer", "ContinuousQuantizer", "Dataset", "FeatureKind", "FitResult",
    "GlmdiscModel", "LogisticParams", "Quantization", "Schema", "SplitSpec", "TrainConfig",
    "bic", "compact", "emit_trace", "fit_mle", "load_csv", "load_schema", "loglik", "order",
    "predict", "predict_proba", "quantize_dataset", "save_csv", "split", "train",
]
