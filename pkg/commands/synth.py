# Copyright (c) mm-opinion-miner contributors
import argparse
import os

from experiments.manifest import MANIFEST_FILE, RunManifest
from experiments.synthetic import make_corpus, write_corpus

from . import constants as c
from .base import BaseCommand, snapshot
from .util import flags, require, strtobool

from typing import Any, Dict

__all__ = ["SynthCommand"]


class SynthCommand(BaseCommand):
    name = "synth"
    help = ("Generate a synthetic corpus: aligned sentences, subtitles, WAV "
            "audio, video features and word vectors.")

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            *flags(c.OUT),
            dest=c.OUT,
            type=str,
            help="Output directory.",
        )
        parser.add_argument(
            *flags(c.SEED),
            dest=c.SEED,
            type=int,
            default=0,
        )
        parser.add_argument(
            *flags(c.SIZE),
            dest=c.SIZE,
            type=int,
            default=50,
            help="Number of sentences.",
        )
        parser.add_argument(
            *flags(c.VIDEO_DIM),
            dest=c.VIDEO_DIM,
            type=int,
            default=16,
            help="Dimension of the video feature vectors.",
        )
        parser.add_argument(
            *flags(c.MODALITY_ONLY),
            dest=c.MODALITY_ONLY,
            nargs="?",
            const=True,
            default=False,
            type=strtobool,
            help="Make the words sentiment-neutral; only media tells classes "
                 "apart.",
        )

    def run(self, args: Dict[str, Any]) -> int:
        require(args, c.OUT)
        manifest = RunManifest(self.name, snapshot(args), {})
        corpus = make_corpus(args[c.SEED], args[c.SIZE],
                             modality_only=args[c.MODALITY_ONLY],
                             video_dim=args[c.VIDEO_DIM])
        paths = write_corpus(corpus, args[c.OUT])
        manifest.outputs = paths
        manifest.finish()
        manifest.write(os.path.join(args[c.OUT], MANIFEST_FILE))
        for key, path in paths.items():
            print(f"{key:<12}{path}")
        return c.EXIT_OK
