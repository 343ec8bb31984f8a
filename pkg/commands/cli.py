# Copyright (c) mm-opinion-miner contributors
"""
Entry point: `mm-opinion-miner <command> [flags]`. Maps failures to exit
codes: 2 for usage and configuration errors, 3 for bad or missing data and
4 for numeric failures during training.
"""
import logging
import sys

from absa.errors import ConfigError, FormatError, ValidationError
from model.autodiff import NumericError, ShapeError

from . import __version__, constants as c
from .ablate import AblateCommand
from .align import AlignCommand
from .base import BaseCommand
from .eval import EvalCommand
from .features import FeaturesCommand
from .synth import SynthCommand
from .train import TrainCommand
from .util import configure_logging

from typing import Dict, List, Optional, Sequence, Type

__all__ = ["COMMANDS", "main"]

COMMANDS: Dict[str, Type[BaseCommand]] = {
    cmd.name: cmd for cmd in (AlignCommand, FeaturesCommand, TrainCommand,
                              EvalCommand, AblateCommand, SynthCommand)
}


def usage() -> str:
    lines = [f"usage: mm-opinion-miner <command> [flags]  (version "
             f"{__version__})", "", "commands:"]
    for name, cmd in COMMANDS.items():
        lines.append(f"  {name:<10}{cmd.help}")
    lines.append("")
    lines.append("Run 'mm-opinion-miner <command> --help' for its flags.")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(usage())
        return c.EXIT_OK if args else c.EXIT_USAGE
    if args[0] == "--version":
        print(__version__)
        return c.EXIT_OK

    command = COMMANDS.get(args[0])
    if command is None:
        print(f"unknown command {args[0]!r}\n\n{usage()}", file=sys.stderr)
        return c.EXIT_USAGE

    try:
        try:
            parsed = command.parse_args(args[1:])
        except SystemExit as e:
            # argparse exits 0 for --help and 2 for bad flags
            return e.code if isinstance(e.code, int) else c.EXIT_USAGE
        configure_logging(parsed[c.DEBUG])
        logging.debug(f"{command.name} settings: {parsed}")
        return command().run(parsed)
    except ConfigError as e:
        logging.error(f"{command.name}: {e}")
        return c.EXIT_USAGE
    except (NumericError, ShapeError) as e:
        logging.error(f"{command.name}: numeric failure: {e}")
        return c.EXIT_NUMERIC
    except (ValidationError, FormatError, FileNotFoundError) as e:
        logging.error(f"{command.name}: {e}")
        return c.EXIT_DATA
    except ValueError as e:
        logging.error(f"{command.name}: {e}")
        return c.EXIT_USAGE
