"""Pressure-mat infant movement classification toolkit.

Encodes 500-frame 32x32 pressure recordings into six center-of-pressure
and mean-pressure signals, derives statistical features, trains four
classifier families (kernel SVM, feed-forward, 1-d convolutional and
LSTM networks), and evaluates them with infant-grouped cross-validation.
"""

__version__ = "0.1.0"

from .architectures import ARCH_NAMES, build_architecture, reshape_for_lstm
from .classifiers import NetworkClassifier
from .crossval import CvReport, FoldPlan, grouped_kfold, run_crossval
from .dataset import (
    Dataset,
    PressureSnippet,
    load_dataset,
    read_snippet,
    write_snippet,
)
from .encoding import MotionEncoder, encode
from .engine import TrainConfig
from .features import FeatureExtractor, extract_features
from .metrics import Metrics, ci95_mean, confusion, t_test
from .svm import KernelSVC
from .synth import SynthSpec, generate_synthetic, make_two_regime_dataset

__all__ = [
    "__version__",
    "ARCH_NAMES", "build_architecture", "reshape_for_lstm",
    "NetworkClassifier", "KernelSVC",
    "CvReport", "FoldPlan", "grouped_kfold", "run_crossval",
    "Dataset", "PressureSnippet", "load_dataset", "read_snippet", "write_snippet",
    "MotionEncoder", "encode", "FeatureExtractor", "extract_features",
    "TrainConfig", "Metrics", "ci95_mean", "confusion", "t_test",
    "SynthSpec", "generate_synthetic", "make_two_regime_dataset",
]
