# Copyright (c) mm-opinion-miner contributors
"""
Experiment protocols built on single training runs: k-fold
cross-validation, multi-seed runs on a fixed split and the ablation grid
with paired significance tests against the text-only variant.

Every run writes its own directory:

    config.json  checkpoint.bin  metrics.json  predictions.conll  manifest.json
"""
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import fsspec
import numpy as np
import pyarrow as pa
import pyarrow.csv as pacsv
import pyarrow.parquet as pq

from absa.errors import ConfigError
from absa.ingest import Sentence
from media.features import Segment
from model.checkpoint import save_checkpoint
from model.network import VARIANTS, variant

from .batching import prepare_sentences, target_tags
from .conll import ScoredSentence, write_predictions
from .folds import FoldPlan, Split, fixed_split, validation_split
from .manifest import MANIFEST_FILE, RunManifest
from .metrics import MetricsReport
from .stats import Verdict, paired_ttest
from .training import TrainConfig, evaluate, predict, train

from typing import Any, Dict, List, Mapping, Optional, Sequence

__all__ = [
    "RunData",
    "Job",
    "RunOutcome",
    "AggregateReport",
    "run_job",
    "run_jobs",
    "cross_validate",
    "multi_seed",
    "ablate",
    "compare",
    "write_table",
    "format_table",
    "COMPARED_METRICS",
    "REFERENCE_VARIANT",
    "UNTESTED",
]

COMPARED_METRICS = ("ae_precision", "ae_recall", "ae_f1")
REFERENCE_VARIANT = "T"
UNTESTED = "untested"
_COLUMNS = ("mean", "t", "p", "stars", "verdict")


@dataclass(frozen=True)
class RunData:
    """Inputs shared by every run of an experiment."""
    sentences: List[Sentence]
    segments: Optional[Dict[str, Segment]] = None
    embeddings_path: Optional[str] = None
    input_hashes: Dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Job:
    name: str
    config: TrainConfig
    train_ids: List[str]
    valid_ids: List[str]
    test_ids: List[str]
    out_dir: str
    command: str = "train"


@dataclass
class RunOutcome:
    name: str
    out_dir: str
    test: MetricsReport
    valid: Optional[MetricsReport]
    best_epoch: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "out_dir": self.out_dir,
            "best_epoch": self.best_epoch,
            "test": self.test.to_dict(),
            "valid": self.valid.to_dict() if self.valid else None,
        }


@dataclass
class AggregateReport:
    """Per-run reports (in fold or seed order) with their means."""
    runs: List[RunOutcome]

    def vector(self, metric: str, split: str = "test") -> List[float]:
        out = []
        for run in self.runs:
            report = run.test if split == "test" else run.valid
            if report is None:
                raise KeyError(f"run {run.name} has no {split} report")
            out.append(report.flat()[metric])
        return out

    def means(self, split: str = "test") -> Dict[str, float]:
        """Mean of every metric reported by all runs."""
        flats = [(r.test if split == "test" else r.valid) for r in self.runs]
        if not flats or any(f is None for f in flats):
            return {}
        dicts = [f.flat() for f in flats if f is not None]
        keys = [k for k in dicts[0] if all(k in d for d in dicts)]
        return {k: float(np.mean([d[k] for d in dicts])) for k in keys}

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "runs": [r.to_dict() for r in self.runs],
            "mean_test": self.means("test"),
        }
        if all(r.valid is not None for r in self.runs):
            out["mean_valid"] = self.means("valid")
        return out


def _select(sentences: Sequence[Sentence], ids: Sequence[str]
            ) -> List[Sentence]:
    by_id = {s.id: s for s in sentences}
    return [by_id[i] for i in ids]


def _write_json(payload: Any, path: str) -> None:
    with fsspec.open(path, "wt", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def run_job(job: Job, data: RunData) -> RunOutcome:
    """
    Train, score and write one run directory. A top-level function so
    process pool workers can pickle it.
    """
    start = time.time()
    manifest = RunManifest(job.command, job.config.to_dict(),
                           dict(data.input_hashes))
    fs, _, _ = fsspec.get_fs_token_paths(job.out_dir)
    fs.makedirs(job.out_dir, exist_ok=True)

    train_set = _select(data.sentences, job.train_ids)
    valid_set = _select(data.sentences, job.valid_ids) or None
    test_set = prepare_sentences(_select(data.sentences, job.test_ids),
                                 job.config.model)
    logging.info(f"run {job.name}: {len(train_set):,} train, "
                 f"{len(job.valid_ids):,} valid, {len(test_set):,} test")
    result = train(job.config, train_set, valid_set, segments=data.segments,
                   embeddings_path=data.embeddings_path)
    model, vocab = result.model, result.vocab

    predictions = predict(model, test_set, vocab, data.segments,
                          batch_size=job.config.batch_size)
    test_report = evaluate(model, test_set, vocab, data.segments,
                           predictions=predictions)
    valid_report = None
    if valid_set:
        valid_report = evaluate(
            model, prepare_sentences(valid_set, model.config), vocab,
            data.segments, batch_size=job.config.batch_size)

    outputs = {
        "config": os.path.join(job.out_dir, "config.json"),
        "checkpoint": os.path.join(job.out_dir, "checkpoint.bin"),
        "metrics": os.path.join(job.out_dir, "metrics.json"),
        "predictions": os.path.join(job.out_dir, "predictions.conll"),
    }
    _write_json(result.config.to_dict(), outputs["config"])
    save_checkpoint(outputs["checkpoint"], model, model.config,
                    {"vocab": vocab.to_json(),
                     "best_epoch": result.best_epoch})
    _write_json({
        "test": test_report.to_dict(),
        "valid": valid_report.to_dict() if valid_report else None,
        "training": result.to_dict(),
    }, outputs["metrics"])
    write_predictions(
        (ScoredSentence(s.tokens, target_tags(s, model.config), p.tags)
         for s, p in zip(test_set, predictions)),
        outputs["predictions"])
    manifest.outputs = outputs
    manifest.finish()
    manifest.write(os.path.join(job.out_dir, MANIFEST_FILE))

    logging.info(f"run {job.name}: test AE F1 {test_report.ae_f1:.4f} "
                 f"(completed in {time.time() - start:,.3f}s)")
    return RunOutcome(job.name, job.out_dir, test_report, valid_report,
                      result.best_epoch)


def run_jobs(jobs: Sequence[Job], data: RunData,
             workers: int = 1) -> List[RunOutcome]:
    """Runs in job order; with `workers` > 1 they execute in a process pool."""
    if workers < 1:
        raise ConfigError(f"--jobs must be positive, got {workers}")
    if workers == 1 or len(jobs) == 1:
        return [run_job(j, data) for j in jobs]
    logging.info(f"running {len(jobs):,} jobs on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_job, jobs, [data] * len(jobs)))


def cross_validate(config: TrainConfig, data: RunData, out_dir: str, *,
                   k: int = 5, workers: int = 1,
                   command: str = "train") -> AggregateReport:
    """
    One run per fold. Each fold holds out `valid_fraction` of its training
    sentences for early stopping.
    """
    config.validate()
    usable = prepare_sentences(data.sentences, config.model)
    ids = [s.id for s in usable]
    plan = FoldPlan.make(ids, k, config.seed)
    logging.info(f"{k}-fold cross-validation over {len(ids):,} sentences "
                 f"(fold sizes {plan.sizes()})")
    jobs = []
    for fold in range(k):
        test_ids = set(plan.test_ids(fold))
        rest = [i for i in ids if i not in test_ids]
        train_ids, valid_ids = validation_split(
            rest, config.valid_fraction, config.seed + fold)
        jobs.append(Job(f"fold-{fold}", config, train_ids, valid_ids,
                        [i for i in ids if i in test_ids],
                        os.path.join(out_dir, f"fold-{fold}"), command))
    return AggregateReport(run_jobs(jobs, replace(data, sentences=usable),
                                    workers))


def multi_seed(config: TrainConfig, data: RunData, out_dir: str,
               seeds: Sequence[int] = (0, 1, 2, 3, 4), *,
               split: Optional[Split] = None, workers: int = 1,
               command: str = "train") -> AggregateReport:
    """
    One run per seed on a fixed train/valid/test split (seeded 80/10/10
    unless given); reports carry validation and test metrics.
    """
    config.validate()
    if not seeds:
        raise ConfigError("at least one seed is required")
    usable = prepare_sentences(data.sentences, config.model)
    if split is None:
        split = fixed_split([s.id for s in usable], config.seed)
    logging.info(f"{len(seeds)} seeds on a fixed split of "
                 f"{len(split.train):,}/{len(split.valid):,}/"
                 f"{len(split.test):,} sentences")
    jobs = [Job(f"seed-{s}", replace(config, seed=s), split.train,
                split.valid, split.test,
                os.path.join(out_dir, f"seed-{s}"), command)
            for s in seeds]
    return AggregateReport(run_jobs(jobs, replace(data, sentences=usable),
                                    workers))


def _variant_dir(name: str) -> str:
    return name.replace("+", "-")


def ablate(config: TrainConfig, data: RunData, out_dir: str, *,
           variants: Sequence[str] = tuple(VARIANTS), k: int = 5,
           seeds: Optional[Sequence[int]] = None,
           workers: int = 1) -> Dict[str, AggregateReport]:
    """
    The ablation grid: every variant under the same protocol and splits,
    cross-validation by default or multi-seed when `seeds` are given.
    """
    needs_vectors = [v for v in variants if v in VARIANTS and VARIANTS[v][1]]
    if needs_vectors and data.embeddings_path is None:
        raise ConfigError(f"variants {needs_vectors} use pre-trained "
                          "embeddings; pass an embeddings file")
    reports: Dict[str, AggregateReport] = {}
    for name in variants:
        run_config = replace(config, model=variant(name, config.model))
        target = os.path.join(out_dir, _variant_dir(name))
        logging.info(f"ablation variant {name}")
        if seeds is None:
            reports[name] = cross_validate(run_config, data, target, k=k,
                                           workers=workers, command="ablate")
        else:
            reports[name] = multi_seed(run_config, data, target, seeds,
                                       workers=workers, command="ablate")
    return reports


def compare(reports: Mapping[str, AggregateReport],
            reference: str = REFERENCE_VARIANT,
            metrics: Sequence[str] = COMPARED_METRICS) -> pa.Table:
    """
    One row per variant: metric means and, against `reference`, paired
    t-tests over the per-fold (or per-seed) metric vectors. The verdict
    column tells a tested pair from one with no difference at all and from
    one with too few or unmatched runs ("untested").
    """
    if reference not in reports:
        raise ConfigError(f"comparison run {reference!r} is missing; have "
                          f"{sorted(reports)}")
    base = reports[reference]
    columns: Dict[str, List[Any]] = {"variant": [], "runs": []}
    for m in metrics:
        for suffix in _COLUMNS:
            columns[f"{m}_{suffix}"] = []
    for name, report in reports.items():
        columns["variant"].append(name)
        columns["runs"].append(len(report.runs))
        for m in metrics:
            values = report.vector(m)
            columns[f"{m}_mean"].append(float(np.mean(values)))
            if len(values) < 2 or len(values) != len(base.runs):
                result = None
            else:
                result = paired_ttest(values, base.vector(m))
            columns[f"{m}_t"].append(result.statistic if result else None)
            columns[f"{m}_p"].append(result.p_value if result else None)
            columns[f"{m}_stars"].append(result.stars if result else "")
            columns[f"{m}_verdict"].append(
                result.verdict.value if result else UNTESTED)
    schema = pa.schema(
        [("variant", pa.string()), ("runs", pa.int64())]
        + [(f"{m}_{s}", pa.string() if s in ("stars", "verdict")
            else pa.float64())
           for m in metrics for s in _COLUMNS])
    return pa.table(columns, schema=schema)


def write_table(table: pa.Table, out_dir: str,
                stem: str = "comparison") -> Dict[str, str]:
    """Write the comparison table as CSV and Parquet."""
    fs, _, _ = fsspec.get_fs_token_paths(out_dir)
    fs.makedirs(out_dir, exist_ok=True)
    paths = {"csv": os.path.join(out_dir, f"{stem}.csv"),
             "parquet": os.path.join(out_dir, f"{stem}.parquet")}
    with fsspec.open(paths["csv"], "wb") as f:
        pacsv.write_csv(table, f)
    with fsspec.open(paths["parquet"], "wb") as f:
        pq.write_table(table, f)
    logging.info(f"wrote {table.num_rows:,} comparison rows to "
                 f"{paths['csv']} and {paths['parquet']}")
    return paths


def _mark(row: Mapping[str, Any], metric: str) -> str:
    if row[f"{metric}_verdict"] == Verdict.NO_DIFFERENCE.value:
        return "="
    return str(row[f"{metric}_stars"] or "")


def format_table(table: pa.Table,
                 metrics: Sequence[str] = COMPARED_METRICS) -> str:
    """
    Human-readable summary: means with significance stars, "=" where the
    runs match the reference exactly.
    """
    header = f"{'variant':<16}" + "".join(f"{m:>14}" for m in metrics)
    lines = [header, "-" * len(header)]
    rows = table.to_pylist()
    for row in rows:
        cells = "".join(
            f"{row[f'{m}_mean']:>11.4f}{_mark(row, m):<3}" for m in metrics)
        lines.append(f"{row['variant']:<16}{cells}")
    return "\n".join(lines)
