# Copyright (c) mm-opinion-miner contributors
import argparse
import logging
import os
import time

import fsspec

from absa.ingest import load_dataset, save_dataset
from absa.subalign import (
    DEFAULT_THRESHOLD, DEFAULT_WINDOW, align, apply_alignment, parse_srt,
    write_alignment
)
from experiments.manifest import MANIFEST_FILE, RunManifest, hash_inputs

from . import constants as c
from .base import BaseCommand, snapshot
from .util import flags, require

from typing import Any, Dict

__all__ = ["AlignCommand"]


class AlignCommand(BaseCommand):
    """
    Give sentences time spans from a subtitle file. Writes aligned.jsonl
    (the sentences with start_ms/end_ms filled in) and alignment.jsonl (one
    result per sentence, matched or not) to the output directory.
    """
    name = "align"
    help = "Align annotated sentences to SubRip subtitle chunks."

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            *flags(c.SRT),
            dest=c.SRT,
            type=str,
            help="SubRip (.srt) subtitle file.",
        )
        parser.add_argument(
            *flags(c.SENTENCES),
            dest=c.SENTENCES,
            type=str,
            help="Annotated sentences (JSONL or CoNLL).",
        )
        parser.add_argument(
            *flags(c.THRESHOLD),
            dest=c.THRESHOLD,
            type=float,
            default=DEFAULT_THRESHOLD,
            help="Minimum similarity for a fuzzy match.",
        )
        parser.add_argument(
            *flags(c.WINDOW),
            dest=c.WINDOW,
            type=int,
            default=DEFAULT_WINDOW,
            help="Longest run of consecutive chunks matched as one.",
        )
        parser.add_argument(
            *flags(c.OUT),
            dest=c.OUT,
            type=str,
            help="Output directory.",
        )

    def run(self, args: Dict[str, Any]) -> int:
        require(args, c.SRT, c.SENTENCES, c.OUT)
        start = time.time()
        manifest = RunManifest(self.name, snapshot(args),
                               hash_inputs([args[c.SRT], args[c.SENTENCES]]))

        # 1. Read inputs.
        chunks = parse_srt(args[c.SRT])
        sentences = load_dataset(args[c.SENTENCES], strict=False)

        # 2. Match.
        results = align(sentences, chunks, args[c.THRESHOLD], args[c.WINDOW])

        # 3. Write outputs.
        out = args[c.OUT]
        fs, _, _ = fsspec.get_fs_token_paths(out)
        fs.makedirs(out, exist_ok=True)
        outputs = {
            "aligned": os.path.join(out, "aligned.jsonl"),
            "alignment": os.path.join(out, "alignment.jsonl"),
        }
        save_dataset(apply_alignment(sentences, results), outputs["aligned"])
        write_alignment(results, outputs["alignment"])
        manifest.outputs = outputs
        manifest.finish()
        manifest.write(os.path.join(out, MANIFEST_FILE))

        matched = sum(1 for r in results if r.matched)
        print(f"aligned {matched} of {len(results)} sentences to "
              f"{len(chunks)} subtitle chunks")
        for r in results:
            if not r.matched:
                print(f"  unmatched {r.sentence_id} "
                      f"(best similarity {r.best_similarity:.3f})")
        logging.info(f"completed in {time.time() - start:,.3f}s")
        return c.EXIT_OK
