"""
End-to-end runs of the subcommands on synthetic fixtures.
"""
import json
from dataclasses import replace
from pathlib import Path

import pyarrow.csv as pacsv
import pytest

from absa.ingest import Sentence, load_dataset, save_dataset
from absa.labels import TagSequence, to_ae
from absa.subalign import SubtitleChunk, emit_srt
from experiments.manifest import RunManifest
from experiments.synthetic import make_corpus, write_corpus
from model.network import VARIANTS

from . import constants as c
from .cli import main

from typing import Dict, List

# tiny model and media settings shared by every run
TINY = """
embedding_dim = 8
text_hidden = 8
audio_hidden = 6
video_hidden = 6
fusion_hidden = 8
attention_dim = 6
sentence_hidden = [12]
dropout = 0.0
max_epochs = 2
patience = 2
learning_rate = 0.01
window = 64
hop = 32
video_dim = 16
max_frames = 8
"""


@pytest.fixture
def fixtures(tmp_path: Path) -> Dict[str, str]:
    paths = write_corpus(make_corpus(seed=7, n=15), str(tmp_path / "data"))
    config = tmp_path / "tiny.toml"
    config.write_text(TINY)
    paths["config"] = str(config)
    return paths


def media_flags(paths: Dict[str, str]) -> List[str]:
    return ["--wav", paths["wav"], "--video-feats", paths["video"]]


def test_synth_is_byte_identical(tmp_path: Path) -> None:
    for name in ("a", "b"):
        assert main(["synth", "--out", str(tmp_path / name), "--seed", "7",
                     "--size", "12"]) == c.EXIT_OK
    files = sorted(p.relative_to(tmp_path / "a")
                   for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 6
    for rel in files:
        if rel.name == "manifest.json":
            continue
        assert (tmp_path / "a" / rel).read_bytes() == \
            (tmp_path / "b" / rel).read_bytes()


def test_train_simple(fixtures: Dict[str, str], tmp_path: Path,
                      capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "run"
    code = main(["train", "--config", fixtures["config"], "--sentences",
                 fixtures["sentences"], "--setting", "simple", "--out-dir",
                 str(out)])
    assert code == c.EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0.0 <= metrics["test"]["ae_f1"] <= 1.0
    manifest = RunManifest.read(str(out / "manifest.json"))
    assert fixtures["sentences"] in manifest.inputs
    assert "ae_f1" in capsys.readouterr().out

    # the eval command scores the written predictions the same way
    scored = tmp_path / "scored"
    assert main(["eval", "--conll", str(out / "predictions.conll"),
                 "--out", str(scored)]) == c.EXIT_OK
    rescored = json.loads((scored / "metrics.json").read_text())
    assert rescored["ae_f1"] == pytest.approx(metrics["test"]["ae_f1"])
    assert "processed" in capsys.readouterr().out


def test_train_multimodal_folds(fixtures: Dict[str, str],
                                tmp_path: Path) -> None:
    out = tmp_path / "cv"
    code = main(["train", "--config", fixtures["config"], "--sentences",
                 fixtures["sentences"], "--setting", "cal", "--use-audio",
                 "--use-video", "--folds", "2", "--out-dir", str(out)]
                + media_flags(fixtures))
    assert code == c.EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert [r["name"] for r in summary["runs"]] == ["fold-0", "fold-1"]
    assert "sc_macro_f1" in summary["mean_test"]
    for folder in (out, out / "fold-0", out / "fold-1"):
        assert (folder / "manifest.json").is_file()
    config = json.loads((out / "fold-0" / "config.json").read_text())
    assert config["model"]["use_audio"] and config["model"]["use_video"]


def test_jsl_without_sentence_sentiments(fixtures: Dict[str, str],
                                         tmp_path: Path) -> None:
    """Plain IOB tags and no sentence labels cannot train jsl."""
    plain = []
    for s in load_dataset(fixtures["sentences"]):
        assert s.gold is not None
        plain.append(replace(s, gold=to_ae(s.gold), sentiment=None))
    path = tmp_path / "plain.jsonl"
    save_dataset(plain, str(path))
    out = tmp_path / "run"
    code = main(["train", "--sentences", str(path), "--setting", "jsl",
                 "--out-dir", str(out)])
    assert code == c.EXIT_USAGE
    assert not out.exists()


def test_ablate_grid(fixtures: Dict[str, str], tmp_path: Path,
                     capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "ablation"
    code = main(["ablate", "--config", fixtures["config"], "--sentences",
                 fixtures["sentences"], "--embeddings",
                 fixtures["embeddings"], "--folds", "2", "--max-epochs", "1",
                 "--out-dir", str(out)] + media_flags(fixtures))
    assert code == c.EXIT_OK
    table = pacsv.read_csv(str(out / "comparison.csv"))
    assert table.column("variant").to_pylist() == list(VARIANTS)
    printed = capsys.readouterr().out
    assert all(name in printed for name in VARIANTS)


def test_ablate_needs_embeddings(fixtures: Dict[str, str],
                                 tmp_path: Path) -> None:
    code = main(["ablate", "--config", fixtures["config"], "--sentences",
                 fixtures["sentences"], "--out-dir", str(tmp_path / "x")]
                + media_flags(fixtures))
    assert code == c.EXIT_USAGE


def test_eval_datasets(tmp_path: Path,
                       capsys: pytest.CaptureFixture[str]) -> None:
    tokens = ("the", "battery", "life", "is", "great")
    gold = [Sentence("a", tokens, TagSequence.infer(
        ["O", "B-POS", "I-POS", "O", "O"]))]
    pred = [Sentence("a", tokens, TagSequence.infer(
        ["O", "B-POS", "O", "O", "O"]))]
    save_dataset(gold, str(tmp_path / "gold.jsonl"))
    save_dataset(pred, str(tmp_path / "pred.jsonl"))
    code = main(["eval", "--gold", str(tmp_path / "gold.jsonl"),
                 "--predictions", str(tmp_path / "pred.jsonl"),
                 "--setting", "cal", "--out", str(tmp_path / "out")])
    assert code == c.EXIT_OK
    metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert metrics["ae_f1"] == 0.0
    assert metrics["per_type"]["POS"]["support"] == 1
    printed = capsys.readouterr().out
    assert "processed 5 tokens with 1 phrases; found: 1 phrases; " \
        "correct: 0." in printed


def test_eval_missing_prediction(tmp_path: Path) -> None:
    save_dataset([Sentence("a", ("x",), TagSequence.infer(["B"]))],
                 str(tmp_path / "gold.jsonl"))
    save_dataset([Sentence("b", ("x",), TagSequence.infer(["B"]))],
                 str(tmp_path / "pred.jsonl"))
    assert main(["eval", "--gold", str(tmp_path / "gold.jsonl"),
                 "--predictions", str(tmp_path / "pred.jsonl"),
                 "--out", str(tmp_path / "out")]) == c.EXIT_DATA


def test_align(tmp_path: Path) -> None:
    sentences = [Sentence("a", ("I", "love", "it"), text="I love it"),
                 Sentence("b", ("nothing", "matches"),
                          text="nothing matches")]
    save_dataset(sentences, str(tmp_path / "sentences.jsonl"))
    emit_srt([SubtitleChunk(1, 1000, 2000, "I love"),
              SubtitleChunk(2, 2000, 2500, "it"),
              SubtitleChunk(3, 4000, 5000, "something else entirely")],
             str(tmp_path / "subs.srt"))
    out = tmp_path / "aligned"
    assert main(["align", "--srt", str(tmp_path / "subs.srt"),
                 "--sentences", str(tmp_path / "sentences.jsonl"),
                 "--out", str(out)]) == c.EXIT_OK
    aligned = {s.id: s for s in load_dataset(str(out / "aligned.jsonl"))}
    assert aligned["a"].time_span == (1000, 2500)
    assert aligned["b"].time_span is None
    results = [json.loads(line) for line in
               (out / "alignment.jsonl").read_text().splitlines()]
    assert len(results) == 2
    assert (out / "manifest.json").is_file()


def test_features_fill_cache(fixtures: Dict[str, str], tmp_path: Path,
                             capsys: pytest.CaptureFixture[str]) -> None:
    cache = tmp_path / "cache"
    argv = ["features", "--sentences", fixtures["sentences"], "--cache-dir",
            str(cache), "--window", "64", "--hop", "32", "--video-dim",
            "16"] + media_flags(fixtures)
    assert main(argv) == c.EXIT_OK
    assert "0 hits, 30 misses" in capsys.readouterr().out
    assert main(argv) == c.EXIT_OK
    assert "30 hits, 0 misses" in capsys.readouterr().out
    assert (cache / "manifest.json").is_file()


def test_usage_errors(tmp_path: Path) -> None:
    assert main([]) == c.EXIT_USAGE
    assert main(["--help"]) == c.EXIT_OK
    assert main(["frobnicate"]) == c.EXIT_USAGE
    assert main(["train", "--no-such-flag"]) == c.EXIT_USAGE
    assert main(["train", "--out-dir", str(tmp_path)]) == c.EXIT_USAGE
    assert main(["train", "--sentences", str(tmp_path / "missing.jsonl"),
                 "--out-dir", str(tmp_path)]) == c.EXIT_DATA
