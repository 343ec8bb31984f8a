# Copyright (c) mm-opinion-miner contributors
"""
Differentiable tensors, network layers, the CRF and the multi-modal encoder
stack, plus checkpoint IO.
"""
__all__ = [
    "Tensor",
    "ShapeError",
    "NumericError",
    "Adam",
    "AdamState",
    "adam_step",
    "backward",
    "no_grad",
    "Module",
    "BiGru",
    "GruCell",
    "SelfAttention",
    "Crf",
    "viterbi",
    "ModelConfig",
    "ModelInput",
    "EncoderStack",
    "VARIANTS",
    "variant",
    "baseline",
    "save_checkpoint",
    "load_checkpoint",
]

from .autodiff import (
    Tensor, ShapeError, NumericError, Adam, AdamState, adam_step, backward,
    no_grad
)
from .layers import Module, BiGru, GruCell, SelfAttention
from .crf import Crf, viterbi
from .network import (
    ModelConfig, ModelInput, EncoderStack, VARIANTS, variant, baseline
)
from .checkpoint import save_checkpoint, load_checkpoint
