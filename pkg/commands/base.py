# Copyright (c) mm-opinion-miner contributors
"""
The command contract: `parse_args()` turns flags (and an optional TOML
config file) into a dictionary keyed by the names in `constants`, and
`run()` does the work and returns an exit code.
"""
import argparse

from absa.errors import ConfigError
from absa.ingest import Sentence, load_dataset
from experiments.batching import prepare_sentences
from experiments.manifest import hash_inputs
from experiments.runner import RunData
from experiments.training import BATCH_SIZES, TrainConfig
from media.features import (
    DEFAULT_FPS, FeatureCache, SpectrogramParams, extract_segments,
    load_media
)
from model.network import SETTINGS, ModelConfig

from . import constants as c
from .util import (
    comma_list, flags, int_list, load_config, require, strtobool
)

from typing import Any, Dict, List, Optional, Sequence

__all__ = [
    "BaseCommand",
    "ExperimentCommand",
    "add_media_arguments",
    "spectrogram_params",
    "snapshot",
]


class BaseCommand:
    name = ""
    help = ""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        pass

    @classmethod
    def build_parser(cls) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=f"mm-opinion-miner {cls.name}",
                                         description=cls.help)
        cls.add_arguments(parser)
        parser.add_argument(
            *flags(c.CONFIG),
            dest=c.CONFIG,
            type=str,
            help=("TOML file with default settings. Keys are flag names; "
                  f"a [{cls.name}] table overrides top-level keys."),
        )
        parser.add_argument(
            *flags(c.DEBUG),
            dest=c.DEBUG,
            nargs="?",
            const=True,
            default=False,
            type=strtobool,
            help="Enable verbose (debug) logging.",
        )
        return parser

    @classmethod
    def parse_args(cls, args: Optional[Sequence[str]] = None
                   ) -> Dict[str, Any]:
        """
        Settings from the config file become parser defaults, so flags given
        on the command line win.
        """
        parser = cls.build_parser()
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument(*flags(c.CONFIG), dest=c.CONFIG)
        known, _ = pre.parse_known_args(args)

        if known.config:
            values = load_config(known.config, cls.name)
            accepted = set(vars(parser.parse_args([])))
            unknown = sorted(set(values) - accepted)
            if unknown:
                raise ConfigError(f"unknown keys {unknown} in "
                                  f"{known.config} for '{cls.name}'")
            parser.set_defaults(**values)

        ns = parser.parse_args(args)
        return vars(ns)

    def run(self, args: Dict[str, Any]) -> int:
        raise NotImplementedError


def add_media_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        *flags(c.WAV),
        dest=c.WAV,
        type=str,
        help=("16-bit PCM WAV file, or a directory of <media_ref>.wav "
              "files."),
    )
    parser.add_argument(
        *flags(c.VIDEO_FEATS),
        dest=c.VIDEO_FEATS,
        type=str,
        help=("Video feature file (binary or CSV), or a directory of "
              "<media_ref>.feat / <media_ref>.csv files."),
    )
    parser.add_argument(
        *flags(c.VIDEO_DIM),
        dest=c.VIDEO_DIM,
        type=int,
        default=1024,
        help="Dimension of the video feature vectors.",
    )
    parser.add_argument(
        *flags(c.FPS),
        dest=c.FPS,
        type=float,
        default=DEFAULT_FPS,
        help="Frame rate of CSV video features (binary files carry theirs).",
    )
    parser.add_argument(
        *flags(c.WINDOW),
        dest=c.WINDOW,
        type=int,
        default=1024,
        help="Spectrogram window length in samples (a power of two).",
    )
    parser.add_argument(
        *flags(c.HOP),
        dest=c.HOP,
        type=int,
        default=512,
        help="Spectrogram hop in samples.",
    )
    parser.add_argument(
        *flags(c.WINDOW_FN),
        dest=c.WINDOW_FN,
        choices=("hann", "rectangular"),
        default="hann",
        help="Spectrogram window function.",
    )
    parser.add_argument(
        *flags(c.LOG_COMPRESS),
        dest=c.LOG_COMPRESS,
        type=strtobool,
        default=True,
        help="Apply log(1 + magnitude) to spectrograms.",
    )
    parser.add_argument(
        *flags(c.CACHE_DIR),
        dest=c.CACHE_DIR,
        type=str,
        help="Directory of cached per-sentence feature segments.",
    )


def spectrogram_params(args: Dict[str, Any]) -> SpectrogramParams:
    params = SpectrogramParams(args[c.WINDOW], args[c.HOP],
                               args[c.WINDOW_FN], args[c.LOG_COMPRESS])
    try:
        params.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return params


class ExperimentCommand(BaseCommand):
    """Shared flags and data loading of `train` and `ablate`."""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        # Data
        parser.add_argument(
            *flags(c.SENTENCES),
            dest=c.SENTENCES,
            type=str,
            help="Annotated sentences (JSONL or CoNLL), aligned for media.",
        )
        parser.add_argument(
            *flags(c.EMBEDDINGS),
            dest=c.EMBEDDINGS,
            type=str,
            help="Pre-trained word vectors in GloVe text layout.",
        )
        add_media_arguments(parser)
        parser.add_argument(
            *flags(c.MAX_FRAMES),
            dest=c.MAX_FRAMES,
            type=int,
            default=64,
            help="Subsample longer media segments to this many frames.",
        )
        parser.add_argument(
            *flags(c.OUT_DIR),
            dest=c.OUT_DIR,
            type=str,
            help="Directory for run outputs.",
        )

        # Model
        parser.add_argument(
            *flags(c.SETTING),
            dest=c.SETTING,
            choices=SETTINGS,
            default="simple",
            help="Experimental setting.",
        )
        for name, what in ((c.USE_AUDIO, "audio"), (c.USE_VIDEO, "video"),
                           (c.USE_CRF, "a CRF output layer")):
            parser.add_argument(
                *flags(name),
                dest=name,
                nargs="?",
                const=True,
                default=False,
                type=strtobool,
                help=f"Use {what}.",
            )
        parser.add_argument(
            *flags(c.SENTIMENTS),
            dest=c.SENTIMENTS,
            type=comma_list,
            default=["positive", "negative", "neutral"],
            help="Comma-separated sentiment classes.",
        )
        for name in (c.EMBEDDING_DIM, c.TEXT_HIDDEN, c.AUDIO_HIDDEN,
                     c.VIDEO_HIDDEN, c.FUSION_HIDDEN, c.ATTENTION_DIM):
            parser.add_argument(
                *flags(name),
                dest=name,
                type=int,
                help=f"Model size: {name.replace('_', ' ')}.",
            )
        parser.add_argument(
            *flags(c.SENTENCE_HIDDEN),
            dest=c.SENTENCE_HIDDEN,
            type=int_list,
            help="Comma-separated layer sizes of the sentence sentiment MLP.",
        )
        parser.add_argument(
            *flags(c.DROPOUT),
            dest=c.DROPOUT,
            type=float,
            help="Dropout probability.",
        )

        # Training
        parser.add_argument(
            *flags(c.PROFILE),
            dest=c.PROFILE,
            choices=tuple(BATCH_SIZES),
            help="Dataset profile choosing the default batch size.",
        )
        parser.add_argument(
            *flags(c.BATCH_SIZE),
            dest=c.BATCH_SIZE,
            type=int,
            help="Mini-batch size (default 8, or per --profile).",
        )
        parser.add_argument(
            *flags(c.MAX_EPOCHS),
            dest=c.MAX_EPOCHS,
            type=int,
            default=50,
        )
        parser.add_argument(
            *flags(c.PATIENCE),
            dest=c.PATIENCE,
            type=int,
            default=5,
            help="Epochs without improvement before stopping.",
        )
        parser.add_argument(
            *flags(c.LEARNING_RATE),
            dest=c.LEARNING_RATE,
            type=float,
            default=1e-3,
        )
        parser.add_argument(
            *flags(c.SEED),
            dest=c.SEED,
            type=int,
            default=0,
        )
        parser.add_argument(
            *flags(c.SEEDS),
            dest=c.SEEDS,
            type=int_list,
            help="Comma-separated seeds for repeated runs on a fixed split.",
        )
        parser.add_argument(
            *flags(c.FOLDS),
            dest=c.FOLDS,
            type=int,
            help="Number of cross-validation folds.",
        )
        parser.add_argument(
            *flags(c.MIN_FREQUENCY),
            dest=c.MIN_FREQUENCY,
            type=int,
            default=1,
            help="Training tokens seen fewer times map to the unknown token.",
        )
        parser.add_argument(
            *flags(c.VALID_FRACTION),
            dest=c.VALID_FRACTION,
            type=float,
            default=0.1,
            help="Share of each fold's training data used for early stopping.",
        )
        parser.add_argument(
            *flags(c.SELECTION_METRIC),
            dest=c.SELECTION_METRIC,
            default="ae_f1",
            help="Validation metric for early stopping.",
        )
        parser.add_argument(
            *flags(c.JOBS),
            dest=c.JOBS,
            type=int,
            default=1,
            help="Worker processes for folds and seeds.",
        )

    @staticmethod
    def model_config(args: Dict[str, Any]) -> ModelConfig:
        params = spectrogram_params(args)
        sizes = {
            k: args[k] for k in (c.EMBEDDING_DIM, c.TEXT_HIDDEN,
                                 c.AUDIO_HIDDEN, c.VIDEO_HIDDEN,
                                 c.FUSION_HIDDEN, c.ATTENTION_DIM, c.DROPOUT)
            if args.get(k) is not None
        }
        if args.get(c.SENTENCE_HIDDEN) is not None:
            sizes[c.SENTENCE_HIDDEN] = tuple(args[c.SENTENCE_HIDDEN])
        return ModelConfig(
            setting=args[c.SETTING],
            use_audio=args[c.USE_AUDIO],
            use_video=args[c.USE_VIDEO],
            use_crf=args[c.USE_CRF],
            use_pretrained_embeddings=args.get(c.EMBEDDINGS) is not None,
            sentiments=tuple(args[c.SENTIMENTS]),
            audio_dim=params.dim,
            video_dim=args[c.VIDEO_DIM],
            seed=args[c.SEED],
            **sizes,
        )

    @classmethod
    def train_config(cls, args: Dict[str, Any],
                     model: Optional[ModelConfig] = None) -> TrainConfig:
        batch_size = args.get(c.BATCH_SIZE)
        if batch_size is None:
            batch_size = BATCH_SIZES.get(args.get(c.PROFILE) or "", 8)
        config = TrainConfig(
            model=model or cls.model_config(args),
            batch_size=batch_size,
            max_epochs=args[c.MAX_EPOCHS],
            patience=args[c.PATIENCE],
            learning_rate=args[c.LEARNING_RATE],
            seed=args[c.SEED],
            min_frequency=args[c.MIN_FREQUENCY],
            valid_fraction=args[c.VALID_FRACTION],
            selection_metric=args[c.SELECTION_METRIC],
        )
        config.validate()
        return config

    @staticmethod
    def check_protocol(args: Dict[str, Any]) -> None:
        folds, seeds = args.get(c.FOLDS), args.get(c.SEEDS)
        if folds is not None and seeds:
            raise ConfigError("choose either --folds or --seeds, not both")
        if folds is not None and folds < 2:
            raise ConfigError(f"--folds must be at least 2, got {folds}")
        if args[c.JOBS] < 1:
            raise ConfigError(f"--jobs must be positive, got {args[c.JOBS]}")

    @staticmethod
    def load_sentences(args: Dict[str, Any],
                       configs: Sequence[ModelConfig]) -> List[Sentence]:
        """
        Read the sentences and check they suit every configuration before
        any media is touched or any model trained.
        """
        require(args, c.SENTENCES, c.OUT_DIR)
        sentences = load_dataset(args[c.SENTENCES])
        for config in configs:
            prepare_sentences(sentences, config)
        return sentences

    @staticmethod
    def load_run_data(args: Dict[str, Any], sentences: List[Sentence],
                      audio: bool, video: bool) -> RunData:
        if audio and not args.get(c.WAV):
            raise ConfigError("audio models need --wav")
        if video and not args.get(c.VIDEO_FEATS):
            raise ConfigError("video models need --video-feats")
        segments = None
        if audio or video:
            signals, frames = load_media(
                sentences, args[c.WAV] if audio else None,
                args[c.VIDEO_FEATS] if video else None,
                args[c.VIDEO_DIM], args[c.FPS])
            cache = (FeatureCache(args[c.CACHE_DIR])
                     if args.get(c.CACHE_DIR) else None)
            segments = extract_segments(
                sentences, signals, frames, params=spectrogram_params(args),
                video_dim=args[c.VIDEO_DIM], max_frames=args[c.MAX_FRAMES],
                cache=cache)
        hashes = hash_inputs([
            args[c.SENTENCES], args.get(c.EMBEDDINGS),
            args.get(c.WAV) if audio else None,
            args.get(c.VIDEO_FEATS) if video else None,
        ])
        return RunData(sentences, segments, args.get(c.EMBEDDINGS), hashes)


def snapshot(args: Dict[str, Any]) -> Dict[str, Any]:
    """The merged settings as recorded in manifests."""
    return {k: v for k, v in sorted(args.items()) if v is not None}
