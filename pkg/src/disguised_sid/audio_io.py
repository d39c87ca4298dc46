"""PCM WAV reading/writing and corpus manifests."""

from __future__ import annotations

import csv
import struct
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    AudioFormatError,
    EmptyAudioError,
    ManifestError,
    ParameterError,
    UnsupportedAudioError,
)

EMOTIONS = ("neutral", "sad", "fear", "happy", "disgust", "anger")
MANIFEST_COLUMNS = ("path", "speaker_id", "sentence_id", "emotion", "repetition")

_PCM_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Mono audio samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ParameterError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class UtteranceRecord:
    path: str
    speaker_id: str
    sentence_id: int
    emotion: str
    repetition: int

    def __post_init__(self):
        if not 1 <= self.sentence_id <= 8:
            raise ParameterError(f"sentence_id {self.sentence_id} outside 1..8")
        if not 1 <= self.repetition <= 9:
            raise ParameterError(f"repetition {self.repetition} outside 1..9")
        if self.emotion not in EMOTIONS:
            raise ParameterError(f"unknown emotion {self.emotion!r}")
        if not self.speaker_id:
            raise ParameterError("empty speaker_id")


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        tag, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise AudioFormatError(f"chunk {tag!r} truncated")
        yield tag, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> AudioClip:
    """Read a PCM-16 mono or stereo WAV file.

    Stereo input is averaged to mono. No resampling is done.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    pcm = None
    for tag, body in _chunks(data):
        if tag == b"fmt ":
            if len(body) < 16:
                raise AudioFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body)
        elif tag == b"data" and pcm is None:
            pcm = body
    if fmt is None or pcm is None:
        raise AudioFormatError(f"{path}: missing fmt or data chunk")
    format_tag, channels, rate, _, block_align, bits = fmt
    if format_tag != 1:
        raise UnsupportedAudioError(f"{path}: format tag {format_tag} is not PCM")
    if bits != 16:
        raise UnsupportedAudioError(f"{path}: {bits}-bit samples are not supported")
    if channels not in (1, 2):
        raise UnsupportedAudioError(f"{path}: {channels} channels")
    if rate <= 0 or block_align != 2 * channels:
        raise AudioFormatError(f"{path}: inconsistent fmt chunk")
    n_frames = len(pcm) // block_align
    if n_frames == 0:
        raise EmptyAudioError(f"{path}: no samples")
    ints = np.frombuffer(pcm[: n_frames * block_align], dtype="<i2")
    x = ints.reshape(n_frames, channels).astype(np.float64) / _PCM_SCALE
    return AudioClip(x.mean(axis=1), rate)


def write_wav(clip: AudioClip, path) -> None:
    """Write ``clip`` as 16-bit PCM mono, clamping to [-1, 1)."""
    q = np.round(clip.samples * _PCM_SCALE)
    q = np.clip(q, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(q.tobytes())


def load_manifest(path) -> list[UtteranceRecord]:
    """Parse a manifest CSV into validated records, in file order.

    Relative audio paths are resolved against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(f"header must be {','.join(MANIFEST_COLUMNS)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise ManifestError(f"expected 5 fields, got {len(row)}", line=lineno)
            p, spk, sent, emo, rep = (c.strip() for c in row)
            try:
                rec = UtteranceRecord(
                    path=str(base / p) if not Path(p).is_absolute() else p,
                    speaker_id=spk,
                    sentence_id=int(sent),
                    emotion=emo,
                    repetition=int(rep),
                )
            except ValueError as exc:
                raise ManifestError(str(exc), line=lineno) from exc
            records.append(rec)
    return records


def write_manifest(records: Iterable[UtteranceRecord], path, relative_to=None) -> Path:
    path = Path(path)
    root = Path(relative_to) if relative_to is not None else path.parent
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for r in records:
            p = Path(r.path)
            try:
                p = p.relative_to(root)
            except ValueError:
                pass
            writer.writerow([p.as_posix(), r.speaker_id, r.sentence_id, r.emotion, r.repetition])
    return path


def split_partitions(
    records: Sequence[UtteranceRecord],
) -> tuple[list[UtteranceRecord], list[UtteranceRecord]]:
    """Split records into (train, test) following the text-independent protocol.

    Training uses sentences 1-4 in neutral only; testing uses sentences 5-8
    under every emotion.
    """
    train = [r for r in records if r.sentence_id <= 4 and r.emotion == "neutral"]
    test = [r for r in records if r.sentence_id >= 5]
    return train, test
