# Copyright (c) mm-opinion-miner contributors
"""
Annotated text for aspect-based sentiment analysis: tag schemes, dataset
ingestion and subtitle alignment.
"""
__all__ = [
    "ConfigError",
    "FormatError",
    "ValidationError",
    "SentimentClass",
    "AeTag",
    "Tag",
    "Scheme",
    "TagSequence",
    "SentimentSequence",
    "Chunk",
    "TagSet",
    "Sentence",
    "Vocabulary",
    "labels",
    "ingest",
    "subalign",
]

from . import labels, ingest, subalign
from .errors import ConfigError, FormatError, ValidationError
from .labels import (
    SentimentClass, AeTag, Tag, Scheme, TagSequence, SentimentSequence, Chunk,
    TagSet
)
from .ingest import Sentence, Vocabulary
