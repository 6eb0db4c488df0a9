"""Pre-training diagnostics for quantum neural networks.

Builds the tangent kernel of a parameterized quantum circuit at
initialization, extracts a critical learning rate and an error-decay time
from its spectrum, and predicts trained-model outputs with a kernel formula;
a built-in gradient-descent trainer and dataset generators validate the
diagnostics end to end.
"""

__version__ = "0.1.0"

from .analysis import DiagnosticReport, SpectrumReport, aad, build_report, fourier_spectrum, r2_score
from .datasets import (
    Dataset,
    TfimConfig,
    make_moons_dataset,
    make_sinusoid_dataset,
    make_tfim_dataset,
    tfim_ground_magnetization,
)
from .models import ModelConfig, QnnModel, build_model, forward, model_gradient
from .qntk import (
    Diagnostics,
    KernelBundle,
    cross_kernel,
    diagnostics,
    eig_sym,
    error_trajectory,
    inference_map,
    kernel_matrix,
    predict_at_time,
    predict_infinite,
    regularized_inverse,
)
from .training import TrainConfig, TrainLog, gd_step, lazy_metrics, mse_loss, train

__all__ = [
    "DiagnosticReport",
    "SpectrumReport",
    "aad",
    "build_report",
    "fourier_spectrum",
    "r2_score",
    "Dataset",
    "TfimConfig",
    "make_moons_dataset",
    "make_sinusoid_dataset",
    "make_tfim_dataset",
    "tfim_ground_magnetization",
    "ModelConfig",
    "QnnModel",
    "build_model",
    "forward",
    "model_gradient",
    "Diagnostics",
    "KernelBundle",
    "cross_kernel",
    "diagnostics",
    "eig_sym",
    "error_trajectory",
    "inference_map",
    "kernel_matrix",
    "predict_at_time",
    "predict_infinite",
    "regularized_inverse",
    "TrainConfig",
    "TrainLog",
    "gd_step",
    "lazy_metrics",
    "mse_loss",
    "train",
]
