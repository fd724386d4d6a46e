"""Minimal dense/conv training core with fake-quantized weights."""

from .checkpoint import load_weights, save_weights
from .data import Dataset, load_idx, synth_dataset, synth_image_dataset
from .network import (
    LayerParams,
    LayerSpec,
    NetworkSpec,
    Weights,
    build_network_spec,
    copy_weights,
    effective_weights,
    forward,
    init_weights,
    record_weight_stats,
)
from .quantize import grid_levels, quantize_layer, quantize_weight
from .train import (
    TrainConfig,
    cross_entropy,
    evaluate_accuracy,
    finetune_and_estimate,
    sinreq_grad,
    sinreq_loss,
    train,
    weight_decay_loss,
)

__all__ = [
    "Dataset",
    "LayerParams",
    "LayerSpec",
    "NetworkSpec",
    "TrainConfig",
    "Weights",
    "build_network_spec",
    "copy_weights",
    "cross_entropy",
    "effective_weights",
    "evaluate_accuracy",
    "finetune_and_estimate",
    "forward",
    "grid_levels",
    "init_weights",
    "load_idx",
    "load_weights",
    "quantize_layer",
    "quantize_weight",
    "record_weight_stats",
    "save_weights",
    "sinreq_grad",
    "sinreq_loss",
    "synth_dataset",
    "synth_image_dataset",
    "train",
    "weight_decay_loss",
]
