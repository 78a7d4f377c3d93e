"""This module contains the main namespace for neighcnn."""
from __future__ import annotations

from _neighcnn import __version__
from _neighcnn.checkpoint import Checkpoint
from _neighcnn.checkpoint import load_checkpoint
from _neighcnn.checkpoint import save_checkpoint
from _neighcnn.config import hookimpl
from _neighcnn.console import console
from _neighcnn.dataset import DatasetManifest
from _neighcnn.dataset import generate_dataset
from _neighcnn.dataset import PRESETS
from _neighcnn.dataset import read_manifest
from _neighcnn.dataset import Split
from _neighcnn.exceptions import AutogradError
from _neighcnn.exceptions import CheckpointError
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import DataError
from _neighcnn.exceptions import NeighCNNError
from _neighcnn.exceptions import NumericalError
from _neighcnn.exceptions import ShapeError
from _neighcnn.execute import main
from _neighcnn.features import build_feature_extractor
from _neighcnn.features import extract_features
from _neighcnn.features import FeatureExtractor
from _neighcnn.features import save_feature_extractor
from _neighcnn.gradcheck import grad_check
from _neighcnn.gradcheck import GradCheckReport
from _neighcnn.gradcheck import GradientCheck
from _neighcnn.gradcheck import run_gradient_checks
from _neighcnn.losses import euclidean_loss
from _neighcnn.losses import LossComponent
from _neighcnn.losses import LossConfig
from _neighcnn.losses import neighbourhood_loss
from _neighcnn.losses import perceptual_loss
from _neighcnn.losses import total_loss
from _neighcnn.metrics import evaluate_set
from _neighcnn.metrics import MetricReport
from _neighcnn.metrics import psnr
from _neighcnn.metrics import ssim
from _neighcnn.metrics import uqi
from _neighcnn.network import build_model
from _neighcnn.network import despeckle_image
from _neighcnn.network import forward
from _neighcnn.network import Model
from _neighcnn.network import model_from_checkpoint
from _neighcnn.network import model_to_checkpoint
from _neighcnn.network import NeighCNNConfig
from _neighcnn.optim import adam_step
from _neighcnn.optim import AdamConfig
from _neighcnn.optim import AdamState
from _neighcnn.optim import init_adam_state
from _neighcnn.outcomes import ExitCode
from _neighcnn.session import Session
from _neighcnn.speckle import apply_speckle
from _neighcnn.speckle import extract_patches
from _neighcnn.speckle import sample_gamma_noise
from _neighcnn.speckle import SpecklePair
from _neighcnn.tensor import Mode
from _neighcnn.tensor import no_grad
from _neighcnn.tensor import Parameter
from _neighcnn.tensor import Tensor
from _neighcnn.tensor import tensor
from _neighcnn.trainer import run_ablation
from _neighcnn.trainer import run_depth_sweep
from _neighcnn.trainer import run_weight_sweep
from _neighcnn.trainer import train
from _neighcnn.trainer import TrainConfig
from _neighcnn.trainer import TrainHistory


# This import must come last, otherwise a circular import occurs.
from _neighcnn.cli import cli  # noreorder


__all__ = [
    "AdamConfig",
    "AdamState",
    "AutogradError",
    "Checkpoint",
    "CheckpointError",
    "ConfigurationError",
    "DataError",
    "DatasetManifest",
    "ExitCode",
    "FeatureExtractor",
    "GradCheckReport",
    "GradientCheck",
    "LossComponent",
    "LossConfig",
    "MetricReport",
    "Mode",
    "Model",
    "NeighCNNConfig",
    "NeighCNNError",
    "NumericalError",
    "PRESETS",
    "Parameter",
    "Session",
    "ShapeError",
    "SpecklePair",
    "Split",
    "Tensor",
    "TrainConfig",
    "TrainHistory",
    "__version__",
    "adam_step",
    "apply_speckle",
    "build_feature_extractor",
    "build_model",
    "cli",
    "console",
    "despeckle_image",
    "euclidean_loss",
    "evaluate_set",
    "extract_features",
    "extract_patches",
    "forward",
    "generate_dataset",
    "grad_check",
    "hookimpl",
    "init_adam_state",
    "load_checkpoint",
    "main",
    "model_from_checkpoint",
    "model_to_checkpoint",
    "neighbourhood_loss",
    "no_grad",
    "perceptual_loss",
    "psnr",
    "read_manifest",
    "run_ablation",
    "run_depth_sweep",
    "run_gradient_checks",
    "run_weight_sweep",
    "sample_gamma_noise",
    "save_checkpoint",
    "save_feature_extractor",
    "ssim",
    "tensor",
    "total_loss",
    "train",
    "uqi",
]
