# Copyright (c) mm-opinion-miner contributors
import argparse
import logging
import os
import time

from absa.errors import ConfigError
from absa.ingest import load_dataset
from experiments.manifest import MANIFEST_FILE, RunManifest, hash_inputs
from media.features import FeatureCache, extract_segments, load_media

from . import constants as c
from .base import (
    BaseCommand, add_media_arguments, snapshot, spectrogram_params
)
from .util import flags, require

from typing import Any, Dict

__all__ = ["FeaturesCommand"]


class FeaturesCommand(BaseCommand):
    """
    Fill the feature cache: the audio spectrogram and video frames of every
    aligned sentence, cut to its time span. `train` reuses the cache when
    given the same directory and spectrogram settings.
    """
    name = "features"
    help = "Extract per-sentence audio and video features into a cache."

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            *flags(c.SENTENCES),
            dest=c.SENTENCES,
            type=str,
            help="Aligned sentences (with start_ms, end_ms and media_ref).",
        )
        add_media_arguments(parser)

    def run(self, args: Dict[str, Any]) -> int:
        require(args, c.SENTENCES, c.CACHE_DIR)
        if not args.get(c.WAV) and not args.get(c.VIDEO_FEATS):
            raise ConfigError("nothing to extract; pass --wav and/or "
                              "--video-feats")
        start = time.time()
        params = spectrogram_params(args)
        manifest = RunManifest(self.name, snapshot(args), hash_inputs([
            args[c.SENTENCES], args.get(c.WAV), args.get(c.VIDEO_FEATS)]))

        # 1. Read sentences and media.
        sentences = load_dataset(args[c.SENTENCES], strict=False)
        audio, video = load_media(sentences, args.get(c.WAV),
                                  args.get(c.VIDEO_FEATS), args[c.VIDEO_DIM],
                                  args[c.FPS])

        # 2. Extract, writing every segment to the cache.
        cache = FeatureCache(args[c.CACHE_DIR])
        segments = extract_segments(sentences, audio, video, params=params,
                                    video_dim=args[c.VIDEO_DIM], cache=cache)

        manifest.outputs = {"cache": args[c.CACHE_DIR]}
        manifest.finish()
        manifest.write(os.path.join(args[c.CACHE_DIR], MANIFEST_FILE))

        audio_frames = sum(len(s.audio) for s in segments.values()
                           if s.audio is not None)
        video_frames = sum(len(s.video) for s in segments.values()
                           if s.video is not None)
        print(f"{len(segments)} sentences: {audio_frames} audio frames "
              f"(dim {params.dim}), {video_frames} video frames "
              f"(dim {args[c.VIDEO_DIM]})")
        print(f"cache {args[c.CACHE_DIR]}: {cache.hits} hits, "
              f"{cache.misses} misses")
        logging.info(f"completed in {time.time() - start:,.3f}s")
        return c.EXIT_OK
