from aiin_gan_evaluator.neural.rng import Rng, splitmix64
from aiin_gan_evaluator.neural.mlp import (
    ACTIVATIONS,
    ForwardCache,
    Gradients,
    Layer,
    MlpModel,
    backward,
    bce_loss,
    forward,
    grad_check
)
from aiin_gan_evaluator.neural.adam import AdamState, adam_step
from aiin_gan_evaluator.neural.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Rng",
    "splitmix64",
    "ACTIVATIONS",
    "ForwardCache",
    "Gradients",
    "Layer",
    "MlpModel",
    "backward",
    "bce_loss",
    "forward",
    "grad_check",
    "AdamState",
    "adam_step",
    "load_checkpoint",
    "save_checkpoint",
]
