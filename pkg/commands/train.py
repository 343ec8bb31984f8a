# Copyright (c) mm-opinion-miner contributors
import argparse
import json
import logging
import os
import time
from dataclasses import replace

import fsspec

from absa.errors import ConfigError
from experiments.batching import prepare_sentences
from experiments.folds import fixed_split
from experiments.manifest import MANIFEST_FILE, RunManifest
from experiments.runner import (
    AggregateReport, Job, RunData, cross_validate, multi_seed, run_job
)
from experiments.training import TrainConfig
from model.network import VARIANTS, variant

from . import constants as c
from .base import ExperimentCommand, snapshot
from .util import flags, metrics_table

from typing import Any, Dict

__all__ = ["TrainCommand"]


class TrainCommand(ExperimentCommand):
    """
    Train one configuration. Without --folds or --seeds a single run on a
    seeded 80/10/10 split writes straight into --out-dir; with them every
    fold or seed gets a subdirectory and --out-dir holds summary.json.
    """
    name = "train"
    help = "Train and evaluate one model configuration."

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        super().add_arguments(parser)
        parser.add_argument(
            *flags(c.VARIANT),
            dest=c.VARIANT,
            choices=tuple(VARIANTS),
            help=("Ablation variant, e.g. T+GV+CRF+A+V. Overrides "
                  "--use-audio, --use-video and --use-crf."),
        )

    def _single_run(self, config: TrainConfig, data: RunData,
                    out_dir: str) -> Dict[str, Dict[str, float]]:
        usable = prepare_sentences(data.sentences, config.model)
        split = fixed_split([s.id for s in usable], config.seed)
        outcome = run_job(Job("run", config, split.train, split.valid,
                              split.test, out_dir, self.name),
                          replace(data, sentences=usable))
        rows = {"test": outcome.test.flat()}
        if outcome.valid is not None:
            rows["valid"] = outcome.valid.flat()
        return rows

    def _write_summary(self, args: Dict[str, Any], report: AggregateReport,
                       data: RunData) -> None:
        out_dir = args[c.OUT_DIR]
        summary = os.path.join(out_dir, "summary.json")
        with fsspec.open(summary, "wt", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        manifest = RunManifest(self.name, snapshot(args),
                               dict(data.input_hashes))
        manifest.outputs = {"summary": summary}
        manifest.outputs.update({r.name: r.out_dir for r in report.runs})
        manifest.finish()
        manifest.write(os.path.join(out_dir, MANIFEST_FILE))

    def run(self, args: Dict[str, Any]) -> int:
        self.check_protocol(args)
        start = time.time()

        # 1. Resolve the configuration.
        model = self.model_config(args)
        if args.get(c.VARIANT):
            model = variant(args[c.VARIANT], model)
        config = self.train_config(args, model)
        if model.use_pretrained_embeddings and not args.get(c.EMBEDDINGS):
            raise ConfigError(f"variant {model.variant_name} uses pre-trained "
                              "embeddings; pass --embeddings")

        # 2. Load and check the data before touching media.
        sentences = self.load_sentences(args, [model])
        data = self.load_run_data(args, sentences, model.use_audio,
                                  model.use_video)
        logging.info(f"training {model.variant_name} in the {model.setting} "
                     f"setting")

        # 3. Train.
        out_dir = args[c.OUT_DIR]
        folds, seeds = args.get(c.FOLDS), args.get(c.SEEDS)
        if folds or seeds:
            if folds:
                report = cross_validate(config, data, out_dir, k=folds,
                                        workers=args[c.JOBS])
            else:
                report = multi_seed(config, data, out_dir, seeds,
                                    workers=args[c.JOBS])
            self._write_summary(args, report, data)
            rows = {r.name: r.test.flat() for r in report.runs}
            rows["mean"] = report.means()
        else:
            rows = self._single_run(config, data, out_dir)

        print(f"{model.variant_name} ({model.setting}) in {out_dir}")
        print(metrics_table(rows))
        logging.info(f"completed in {time.time() - start:,.3f}s")
        return c.EXIT_OK
