"""landcnn: a from-scratch CNN training and evaluation engine for
land-structure scene classification.

Hot kernels (matmul/im2col-based convolution, pooling) run on a compiled
Cython core when built, with a bitwise-identical pure-numpy fallback.
"""
from .architectures import (Network, build_mini_inception, build_mini_resnet,
                            build_cnn, replace_head)
from .augment import augment_to_count, resize, resize_dataset
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (Dataset, LabeledImage, LabelEncoder, SplitSpec, batches,
                   load_dataset, stratified_split)
from .kernels import BACKEND
from .metrics import accuracy, classification_report, confusion_matrix
from .optimizers import make_optimizer
from .synth import synth_dataset
from .tensor import Tensor
from .training import TrainConfig, TrainHistory, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Dataset", "LabelEncoder", "LabeledImage", "Network",
    "SplitSpec", "Tensor", "TrainConfig", "TrainHistory", "__version__",
    "accuracy", "augment_to_count", "batches", "build_mini_inception",
    "build_mini_resnet", "build_cnn", "classification_report",
    "confusion_matrix", "evaluate", "load_checkpoint", "load_dataset",
    "make_optimizer", "replace_head", "resize", "resize_dataset",
    "save_checkpoint", "stratified_split", "synth_dataset", "train",
]
