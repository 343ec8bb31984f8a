"""
Checkpoint persistence tests.
"""
from dataclasses import replace

import numpy as np
import pytest

from absa.errors import ConfigError, FormatError

from .checkpoint import load_checkpoint, load_tensors, save_checkpoint, save_tensors
from .network import EncoderStack
from .network_test import toy_batch, toy_config


def test_round_trip_is_bit_exact(tmp_path) -> None:
    config = toy_config("jsl")
    model = EncoderStack(config)
    # move away from the seeded initialization
    for p in model.parameters():
        p.data = p.data + np.random.default_rng(3).normal(size=p.shape)
    path = str(tmp_path / "checkpoint.bin")
    save_checkpoint(path, model, config, {"epoch": 7})

    restored, header = load_checkpoint(path, expected=config)
    assert header["epoch"] == 7
    assert restored.config == config
    original = model.state_dict()
    for name, value in restored.state_dict().items():
        assert value.tobytes() == original[name].tobytes()

    batch = toy_batch(config)
    assert restored.predict(batch).tags == model.predict(batch).tags


def test_mismatched_config_is_refused(tmp_path) -> None:
    config = toy_config("simple")
    path = str(tmp_path / "checkpoint.bin")
    save_checkpoint(path, EncoderStack(config), config)
    with pytest.raises(ConfigError, match="use_crf"):
        load_checkpoint(path, expected=replace(config, use_crf=False))


def test_corrupt_files(tmp_path) -> None:
    path = tmp_path / "tensors.bin"
    save_tensors(str(path), {"w": np.arange(6.0).reshape(2, 3)}, {"k": 1})
    tensors, header = load_tensors(str(path))
    assert header == {"k": 1}
    assert tensors["w"].tolist() == [[0, 1, 2], [3, 4, 5]]

    content = path.read_bytes()
    path.write_bytes(content[:-8])
    with pytest.raises(FormatError, match="truncated"):
        load_tensors(str(path))

    path.write_bytes(b"XXXX" + content[4:])
    with pytest.raises(FormatError, match="magic"):
        load_tensors(str(path))

    path.write_bytes(content[:6])
    with pytest.raises(FormatError):
        load_tensors(str(path))
