# Copyright (c) mm-opinion-miner contributors
"""
Audio spectrograms and precomputed video features for aligned sentences.
"""
__all__ = [
    "Modality",
    "AudioSignal",
    "FeatureSequence",
    "SpectrogramParams",
    "FeatureCache",
    "Segment",
    "features",
]

from . import features
from .features import (
    Modality, AudioSignal, FeatureSequence, SpectrogramParams, FeatureCache,
    Segment
)
