# Copyright (c) mm-opinion-miner contributors
"""
Exceptions raised while reading, validating and configuring.
"""
from typing import Optional


class ValidationError(ValueError):
    """
    Annotated data violates a labeling invariant. Carries the offending
    sentence id (when known) and token index.
    """
    def __init__(self, message: str, *, sentence_id: Optional[str] = None,
                 index: Optional[int] = None):
        self.sentence_id = sentence_id
        self.index = index
        where = []
        if sentence_id is not None:
            where.append(f"sentence {sentence_id}")
        if index is not None:
            where.append(f"index {index}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class FormatError(ValueError):
    """
    An input file could not be parsed. The locator names the line, record or
    chunk at fault.
    """
    def __init__(self, message: str, *, locator: Optional[str] = None):
        self.locator = locator
        if locator:
            message = f"{locator}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid configuration or flag combination, detected before any work."""
