# Copyright (c) mm-opinion-miner contributors
import argparse
import json
import logging
import os
import time

import fsspec

from absa.errors import ConfigError
from experiments.manifest import MANIFEST_FILE, RunManifest
from experiments.runner import (
    REFERENCE_VARIANT, ablate, compare, format_table, write_table
)
from model.network import VARIANTS, variant

from . import constants as c
from .base import ExperimentCommand, snapshot
from .util import comma_list, flags

from typing import Any, Dict

__all__ = ["AblateCommand"]


class AblateCommand(ExperimentCommand):
    """
    Run every variant under the same protocol (5-fold cross-validation
    unless --folds or --seeds say otherwise) and compare each against the
    text-only variant with paired t-tests.
    """
    name = "ablate"
    help = "Run the ablation grid and write a comparison table."

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument(
            *flags(c.VARIANTS),
            dest=c.VARIANTS,
            type=comma_list,
            default=list(VARIANTS),
            help="Comma-separated variants to run (default: all seven).",
        )
        parser.add_argument(
            *flags(c.REFERENCE),
            dest=c.REFERENCE,
            default=REFERENCE_VARIANT,
            help="Variant the others are tested against.",
        )

    def run(self, args: Dict[str, Any]) -> int:
        self.check_protocol(args)
        start = time.time()

        # 1. Resolve every variant up front so typos fail fast.
        names = list(dict.fromkeys(args[c.VARIANTS]))
        if args[c.REFERENCE] not in names:
            raise ConfigError(f"reference variant {args[c.REFERENCE]!r} is "
                              f"not among {names}")
        config = self.train_config(args)
        models = [variant(n, config.model) for n in names]
        if any(m.use_pretrained_embeddings for m in models) \
                and not args.get(c.EMBEDDINGS):
            raise ConfigError("variants with GV use pre-trained embeddings; "
                              "pass --embeddings")

        # 2. Load and check data, then media for the variants that need it.
        sentences = self.load_sentences(args, models[:1])
        data = self.load_run_data(args, sentences,
                                  any(m.use_audio for m in models),
                                  any(m.use_video for m in models))

        # 3. Run the grid.
        out_dir = args[c.OUT_DIR]
        reports = ablate(config, data, out_dir, variants=names,
                         k=args.get(c.FOLDS) or 5, seeds=args.get(c.SEEDS),
                         workers=args[c.JOBS])

        # 4. Compare and write results.
        table = compare(reports, args[c.REFERENCE])
        outputs = write_table(table, out_dir)
        outputs["summary"] = os.path.join(out_dir, "summary.json")
        with fsspec.open(outputs["summary"], "wt", encoding="utf-8") as f:
            json.dump({n: r.to_dict() for n, r in reports.items()}, f,
                      indent=2, sort_keys=True)
            f.write("\n")
        manifest = RunManifest(self.name, snapshot(args),
                               dict(data.input_hashes), outputs)
        manifest.finish()
        manifest.write(os.path.join(out_dir, MANIFEST_FILE))

        print(format_table(table))
        print(f"significance against {args[c.REFERENCE]}: *** p<0.01, "
              "** p<0.05, * p<0.10, = no difference")
        logging.info(f"completed in {time.time() - start:,.3f}s")
        return c.EXIT_OK
