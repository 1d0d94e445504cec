"""Bipolar ReLU-family activations, recurrent unit-variance
initialization, and deeply stacked skip-connected vanilla RNNs."""

from .activations import ActivationSpec, spec_from_name
from .corpus import Corpus, ingest, ingest_files
from .dropout import DropoutConfig, DropoutMasks, sample_masks
from .experiments import (
    DynamicsConfig,
    TrainConfig,
    evaluate,
    probe_gradient_flow,
    run_dynamics,
    train,
)
from .lsuv import LsuvConfig, gamma_rebalance, lsuv_init_stack
from .optim import AdamState, adam_update
from .persist import load_model, save_model
from .rng import Rng, sample_gaussian
from .stack import HeadParams, LayerParams, Stack, StackConfig, init_stack

__all__ = [
    "ActivationSpec",
    "AdamState",
    "Corpus",
    "DropoutConfig",
    "DropoutMasks",
    "DynamicsConfig",
    "HeadParams",
    "LayerParams",
    "LsuvConfig",
    "Rng",
    "Stack",
    "StackConfig",
    "TrainConfig",
    "adam_update",
    "evaluate",
    "gamma_rebalance",
    "ingest",
    "ingest_files",
    "init_stack",
    "load_model",
    "lsuv_init_stack",
    "probe_gradient_flow",
    "run_dynamics",
    "sample_gaussian",
    "sample_masks",
    "save_model",
    "spec_from_name",
    "train",
]

__version__ = "0.1.0"
