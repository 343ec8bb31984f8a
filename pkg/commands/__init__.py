# Copyright (c) mm-opinion-miner contributors
"""
Command line interface: one command class per subcommand, each parsing its
flags into a dictionary and running against it.
"""
__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BaseCommand",
    "AlignCommand",
    "FeaturesCommand",
    "TrainCommand",
    "EvalCommand",
    "AblateCommand",
    "SynthCommand",
    "COMMANDS",
    "main",
]

from .base import BaseCommand
from .ablate import AblateCommand
from .align import AlignCommand
from .eval import EvalCommand
from .features import FeaturesCommand
from .synth import SynthCommand
from .train import TrainCommand
from .cli import COMMANDS, main
