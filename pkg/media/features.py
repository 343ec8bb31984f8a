# Copyright (c) mm-opinion-miner contributors
"""
Audio and video feature sequences for sentence-aligned media segments.

Audio arrives as 16-bit PCM mono WAV and becomes a log-magnitude spectrogram;
video arrives as precomputed per-frame vectors. Both are cut to each
sentence's time span and optionally downsampled.
"""
import hashlib
import json
import logging
import os
import struct
import time
from dataclasses import asdict, dataclass
from enum import Enum

import fsspec
import numpy as np
import numpy.typing as npt
import pyarrow as pa
import pyarrow.csv as pacsv
import soundfile as sf
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from absa.errors import FormatError
from absa.ingest import Sentence

from typing import Dict, Iterable, Mapping, Optional, Tuple

__all__ = [
    "Modality",
    "AudioSignal",
    "FeatureSequence",
    "SpectrogramParams",
    "FeatureCache",
    "Segment",
    "read_wav",
    "write_wav",
    "spectrogram",
    "load_video_features",
    "write_video_features",
    "cut_to_span",
    "downsample",
    "extract_segments",
    "media_path",
    "load_media",
    "DEFAULT_FPS",
    "VIDEO_DIM",
]

DEFAULT_FPS = 25.0
VIDEO_DIM = 1024

MAGIC = b"MMVF"
HEADER = struct.Struct("<4sIII")


class Modality(str, Enum):
    AUDIO = "audio"
    VIDEO = "video"


@dataclass(frozen=True)
class AudioSignal:
    samples: npt.NDArray[np.float64]
    sample_rate_hz: int

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0:
            raise ValueError(f"invalid sample rate {self.sample_rate_hz}")
        if self.samples.ndim != 1:
            raise ValueError("audio signal must be mono (one dimension)")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio signal contains non-finite samples")

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration_ms(self) -> float:
        return len(self) * 1000.0 / self.sample_rate_hz


@dataclass(frozen=True)
class FeatureSequence:
    """
    Time-ordered frames of identical width. `frame_times_ms` gives the start
    of each frame relative to the source media.
    """
    modality: Modality
    dim: int
    frames: npt.NDArray[np.float64]
    frame_times_ms: Optional[npt.NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        if self.frames.ndim != 2 or self.frames.shape[1] != self.dim:
            raise ValueError(
                f"frames of shape {self.frames.shape} do not match "
                f"dim {self.dim}"
            )
        if (self.frame_times_ms is not None
                and self.frame_times_ms.shape != (self.frames.shape[0],)):
            raise ValueError("one timestamp per frame required")

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    def __str__(self) -> str:
        return (f"FeatureSequence{{{self.modality.value}, "
                f"frames={len(self):,}, dim={self.dim}}}")

    def take(self, index: npt.NDArray[np.int64]) -> "FeatureSequence":
        times = (self.frame_times_ms[index]
                 if self.frame_times_ms is not None else None)
        return FeatureSequence(self.modality, self.dim, self.frames[index],
                               times)


def read_wav(path: str) -> AudioSignal:
    """Read a mono PCM WAV file as float64 samples in [-1, 1)."""
    with fsspec.open(path, "rb") as f:
        try:
            data, rate = sf.read(f, dtype="float64", always_2d=True)
        except RuntimeError as e:
            raise FormatError(f"unreadable audio ({e})", locator=path) from None
    if data.shape[1] != 1:
        raise FormatError(f"expected mono audio, found {data.shape[1]} "
                          "channels", locator=path)
    logging.info(f"read {data.shape[0]:,} samples at {rate} Hz from {path}")
    return AudioSignal(np.ascontiguousarray(data[:, 0]), int(rate))


def write_wav(signal: AudioSignal, path: str) -> None:
    with fsspec.open(path, "wb") as f:
        sf.write(f, signal.samples, signal.sample_rate_hz, format="WAV",
                 subtype="PCM_16")


@dataclass(frozen=True)
class SpectrogramParams:
    window: int = 1024
    hop: int = 512
    window_fn: str = "hann"
    log_compress: bool = True
    pad: bool = False

    def validate(self) -> None:
        if self.window < 2 or self.window & (self.window - 1):
            raise ValueError(f"window must be a power of two, got {self.window}")
        if not 0 < self.hop <= self.window:
            raise ValueError(f"hop must be in (0, {self.window}], "
                             f"got {self.hop}")
        if self.window_fn not in ("hann", "rectangular"):
            raise ValueError(f"invalid window function {self.window_fn!r}; "
                             "expected 'hann' or 'rectangular'")

    @property
    def dim(self) -> int:
        return self.window // 2 + 1

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode("utf8")
        return hashlib.sha256(payload).hexdigest()[:16]


def spectrogram(signal: AudioSignal, window: int = 1024, hop: int = 512, *,
                window_fn: str = "hann", log_compress: bool = True,
                pad: bool = False) -> FeatureSequence:
    """
    Magnitude spectrum of each `window`-sample frame taken every `hop`
    samples, bins 0..window/2 inclusive, optionally compressed with
    log(1 + x). Frame k starts at k * hop / rate seconds.

    Signals shorter than one window are an error unless `pad` is set, in
    which case they are zero-padded to a single frame.
    """
    params = SpectrogramParams(window, hop, window_fn, log_compress, pad)
    params.validate()

    samples = signal.samples
    if len(samples) < window:
        if not pad:
            raise ValueError(
                f"signal of {len(samples):,} samples is shorter than one "
                f"window ({window}); enable zero padding to extract a frame"
            )
        samples = np.pad(samples, (0, window - len(samples)))

    frames = sliding_window_view(samples, window)[::hop]
    if window_fn == "hann":
        taper = get_window("hann", window, fftbins=True)
    else:
        taper = np.ones(window)
    magnitude = np.abs(np.fft.rfft(frames * taper, axis=1))
    if log_compress:
        magnitude = np.log1p(magnitude)
    times = np.arange(frames.shape[0]) * (hop * 1000.0 / signal.sample_rate_hz)
    return FeatureSequence(Modality.AUDIO, params.dim,
                           magnitude.astype(np.float64), times)


def _read_binary(path: str, expected_dim: int) -> Tuple[np.ndarray, float]:
    with fsspec.open(path, "rb") as f:
        content = f.read()
    if not content:
        raise FormatError("no frames", locator=path)
    if len(content) < HEADER.size:
        raise FormatError("truncated header", locator=path)
    magic, count, dim, fps_milli = HEADER.unpack_from(content)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", locator=path)
    if count == 0:
        raise FormatError("no frames", locator=path)
    if dim != expected_dim:
        raise FormatError(f"dimension mismatch: file has {dim}, expected "
                          f"{expected_dim}", locator=path)
    if fps_milli == 0:
        raise FormatError("frame rate missing", locator=path)
    body = content[HEADER.size:]
    if len(body) < count * dim * 4:
        raise FormatError(f"truncated: expected {count * dim * 4:,} bytes of "
                          f"frames, found {len(body):,}", locator=path)
    frames = np.frombuffer(body, dtype="<f4", count=count * dim)
    return frames.reshape(count, dim).astype(np.float64), fps_milli / 1000.0


def _read_csv(path: str, expected_dim: int) -> np.ndarray:
    with fsspec.open(path, "rb") as f:
        try:
            table = pacsv.read_csv(f, read_options=pacsv.ReadOptions(
                autogenerate_column_names=True))
        except pa.ArrowInvalid as e:
            if "Empty CSV" in str(e):
                raise FormatError("no frames", locator=path) from None
            raise FormatError(f"malformed feature CSV ({e})",
                              locator=path) from None
    if table.num_rows == 0:
        raise FormatError("no frames", locator=path)
    if table.num_columns != expected_dim:
        raise FormatError(f"dimension mismatch: file has {table.num_columns}, "
                          f"expected {expected_dim}", locator=path)
    try:
        columns = [c.to_numpy().astype(np.float64) for c in table.columns]
    except (ValueError, pa.ArrowInvalid) as e:
        raise FormatError(f"non-numeric feature value ({e})",
                          locator=path) from None
    return np.stack(columns, axis=1)


def load_video_features(path: str, expected_dim: int = VIDEO_DIM, *,
                        fps: float = DEFAULT_FPS) -> FeatureSequence:
    """
    Read precomputed per-frame video vectors. Binary files carry their own
    frame rate; CSV files (one frame per line) use `fps`.
    """
    if path.endswith(".csv"):
        frames, rate = _read_csv(path, expected_dim), fps
    else:
        frames, rate = _read_binary(path, expected_dim)
    if not np.all(np.isfinite(frames)):
        raise FormatError("non-finite feature value", locator=path)
    times = np.arange(frames.shape[0]) * (1000.0 / rate)
    logging.info(f"read {frames.shape[0]:,} video frames of dim "
                 f"{expected_dim} at {rate:g} fps from {path}")
    return FeatureSequence(Modality.VIDEO, expected_dim, frames, times)


def write_video_features(seq: FeatureSequence, path: str,
                         fps: float = DEFAULT_FPS) -> None:
    """Write frames in the binary layout (header, then little-endian f32)."""
    with fsspec.open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, len(seq), seq.dim, int(round(fps * 1000))))
        f.write(np.ascontiguousarray(seq.frames, dtype="<f4").tobytes())


def cut_to_span(seq: FeatureSequence, start_ms: float,
                end_ms: float) -> FeatureSequence:
    """Frames whose timestamp lies in [start_ms, end_ms); may be empty."""
    if not start_ms < end_ms:
        raise ValueError(f"empty span [{start_ms}, {end_ms})")
    if seq.frame_times_ms is None:
        raise ValueError("cannot cut a sequence without frame timestamps")
    lo = int(np.searchsorted(seq.frame_times_ms, start_ms, side="left"))
    hi = int(np.searchsorted(seq.frame_times_ms, end_ms, side="left"))
    return seq.take(np.arange(lo, hi))


def downsample(seq: FeatureSequence, max_frames: int) -> FeatureSequence:
    """
    Uniform-stride subsampling down to `max_frames`, keeping the first and
    last frames (only the first when max_frames is 1).
    """
    if max_frames < 1:
        raise ValueError("max_frames must be at least 1")
    if len(seq) <= max_frames:
        return seq
    index = np.round(np.linspace(0, len(seq) - 1, max_frames)).astype(np.int64)
    return seq.take(index)


class FeatureCache:
    """
    One file per sentence segment under `directory`, keyed by media
    reference, span and extraction parameters. Files use the video feature
    layout; cached segments carry times relative to the segment start.
    """
    def __init__(self, directory: str):
        self.directory = directory
        self.hits = 0
        self.misses = 0

    def _path(self, modality: Modality, media_ref: str,
              span: Tuple[int, int], params: str) -> str:
        key = f"{modality.value}|{media_ref}|{span[0]}|{span[1]}|{params}"
        name = hashlib.sha256(key.encode("utf8")).hexdigest()[:32]
        return os.path.join(self.directory, f"{modality.value}-{name}.feat")

    def get(self, modality: Modality, media_ref: str, span: Tuple[int, int],
            params: str, dim: int) -> Optional[FeatureSequence]:
        path = self._path(modality, media_ref, span, params)
        fs, _, _ = fsspec.get_fs_token_paths(path)
        if not fs.exists(path):
            self.misses += 1
            return None
        with fsspec.open(path, "rb") as f:
            content = f.read()
        if len(content) < HEADER.size:
            self._damaged(path, "truncated header")
            return None
        magic, count, file_dim, _ = HEADER.unpack_from(content)
        if magic != MAGIC:
            self._damaged(path, f"bad magic {magic!r}")
            return None
        if file_dim != dim:
            self.misses += 1
            return None
        if len(content) - HEADER.size < count * dim * 4:
            self._damaged(path, "truncated frames")
            return None
        frames = np.frombuffer(content[HEADER.size:], dtype="<f4",
                               count=count * dim)
        self.hits += 1
        return FeatureSequence(modality, dim,
                               frames.reshape(count, dim).astype(np.float64))

    def _damaged(self, path: str, reason: str) -> None:
        logging.warning(f"ignoring cache entry {path}: {reason}")
        self.misses += 1

    def put(self, seq: FeatureSequence, media_ref: str, span: Tuple[int, int],
            params: str) -> None:
        path = self._path(seq.modality, media_ref, span, params)
        fs, _, _ = fsspec.get_fs_token_paths(path)
        fs.makedirs(self.directory, exist_ok=True)
        # the rate field is unused for cached segments
        write_video_features(seq, path, fps=1.0)


@dataclass(frozen=True)
class Segment:
    """Per-sentence media features; either may hold zero frames."""
    audio: Optional[FeatureSequence] = None
    video: Optional[FeatureSequence] = None


def _as_stored(seq: FeatureSequence) -> FeatureSequence:
    """The values a cache hit returns for `seq` (float32 precision)."""
    frames = seq.frames.astype(np.float32).astype(np.float64)
    return FeatureSequence(seq.modality, seq.dim, frames, seq.frame_times_ms)


def _empty(modality: Modality, dim: int) -> FeatureSequence:
    return FeatureSequence(modality, dim, np.zeros((0, dim)), np.zeros(0))


def extract_segments(
        sentences: Iterable[Sentence],
        audio: Optional[Mapping[str, AudioSignal]] = None,
        video: Optional[Mapping[str, FeatureSequence]] = None, *,
        params: SpectrogramParams = SpectrogramParams(),
        video_dim: int = VIDEO_DIM,
        max_frames: Optional[int] = None,
        cache: Optional[FeatureCache] = None) -> Dict[str, Segment]:
    """
    Cut each aligned sentence's audio spectrogram and video frames to its
    time span. Keys of `audio` and `video` are media references. Sentences
    without a span or without media get empty sequences.
    """
    params.validate()
    digest = params.digest()
    video_digest = f"v{video_dim}"
    spectrograms: Dict[str, FeatureSequence] = {}
    segments: Dict[str, Segment] = {}
    empty = 0
    start = time.time()

    def audio_for(ref: str) -> FeatureSequence:
        if ref not in spectrograms:
            assert audio is not None
            spectrograms[ref] = spectrogram(
                audio[ref], params.window, params.hop,
                window_fn=params.window_fn,
                log_compress=params.log_compress, pad=params.pad)
        return spectrograms[ref]

    for n, sentence in enumerate(sentences, start=1):
        ref, span = sentence.media_ref, sentence.time_span
        a: Optional[FeatureSequence] = None
        v: Optional[FeatureSequence] = None
        if audio is not None:
            a = _empty(Modality.AUDIO, params.dim)
            if ref is not None and span is not None and ref in audio:
                cached = (cache.get(Modality.AUDIO, ref, span, digest,
                                    params.dim) if cache else None)
                if cached is None:
                    a = cut_to_span(audio_for(ref), *span)
                    if cache:
                        cache.put(a, ref, span, digest)
                        a = _as_stored(a)
                else:
                    a = cached
        if video is not None:
            v = _empty(Modality.VIDEO, video_dim)
            if ref is not None and span is not None and ref in video:
                cached = (cache.get(Modality.VIDEO, ref, span, video_digest,
                                    video_dim) if cache else None)
                if cached is None:
                    v = cut_to_span(video[ref], *span)
                    if cache:
                        cache.put(v, ref, span, video_digest)
                        v = _as_stored(v)
                else:
                    v = cached
        if max_frames is not None:
            a = downsample(a, max_frames) if a is not None else None
            v = downsample(v, max_frames) if v is not None else None
        if (a is not None and len(a) == 0) or (v is not None and len(v) == 0):
            empty += 1
            logging.warning(f"sentence {sentence.id} has no overlapping "
                            "media frames; using the no-signal frame")
        segments[sentence.id] = Segment(a, v)
        if n % 1000 == 0:
            logging.info(f"...extracted features for {n:,} sentences")

    duration = time.time() - start
    logging.info(f"extracted features for {len(segments):,} sentences "
                 f"({empty:,} with empty media) in {duration:,.3f}s")
    if cache:
        logging.info(f"feature cache: {cache.hits:,} hits, "
                     f"{cache.misses:,} misses")
    return segments


def media_path(location: str, media_ref: str, *suffixes: str) -> str:
    """
    A single file serves every media reference; a directory holds one
    `<media_ref><suffix>` file per reference, the first existing suffix
    winning.
    """
    fs, _, _ = fsspec.get_fs_token_paths(location)
    if not fs.isdir(location):
        return location
    candidates = [os.path.join(location, f"{media_ref}{s}") for s in suffixes]
    for candidate in candidates:
        if fs.exists(candidate):
            return candidate
    raise FileNotFoundError(f"no media file for {media_ref!r} in {location} "
                            f"(tried {', '.join(suffixes)})")


def load_media(sentences: Iterable[Sentence], wav: Optional[str],
               video_feats: Optional[str], video_dim: int = VIDEO_DIM,
               fps: float = DEFAULT_FPS
               ) -> Tuple[Optional[Dict[str, AudioSignal]],
                          Optional[Dict[str, FeatureSequence]]]:
    """Read the audio and video referenced by the sentences, once per file."""
    refs = sorted({s.media_ref for s in sentences if s.media_ref is not None})
    audio: Optional[Dict[str, AudioSignal]] = None
    video: Optional[Dict[str, FeatureSequence]] = None
    if wav is not None:
        audio = {}
        signals: Dict[str, AudioSignal] = {}
        for ref in refs:
            path = media_path(wav, ref, ".wav")
            if path not in signals:
                signals[path] = read_wav(path)
            audio[ref] = signals[path]
    if video_feats is not None:
        video = {}
        sequences: Dict[str, FeatureSequence] = {}
        for ref in refs:
            path = media_path(video_feats, ref, ".feat", ".csv")
            if path not in sequences:
                sequences[path] = load_video_features(path, video_dim, fps=fps)
            video[ref] = sequences[path]
    return audio, video
