"""Label distribution learning with LIFT-SAP label-specific features."""

from liftsap.dataset import (
    DatasetFormatError,
    LabelDistributionDataset,
    SplitIndices,
    load_dataset,
    renormalize,
    split_random,
)
from liftsap.lsf import FeatureConfig, FusionWeights, LsfMapper, fit_lsf_mapper
from liftsap.maxent import OptimizerConfig
from liftsap.metrics import METRIC_NAMES, MetricVector, evaluate
from liftsap.pipeline import TrainConfig, TrainedPipeline, predict, train

__version__ = "0.1.0"

__all__ = [
    "DatasetFormatError",
    "FeatureConfig",
    "FusionWeights",
    "LabelDistributionDataset",
    "LsfMapper",
    "METRIC_NAMES",
    "MetricVector",
    "OptimizerConfig",
    "SplitIndices",
    "TrainConfig",
    "TrainedPipeline",
    "evaluate",
    "fit_lsf_mapper",
    "load_dataset",
    "predict",
    "renormalize",
    "split_random",
    "train",
]
