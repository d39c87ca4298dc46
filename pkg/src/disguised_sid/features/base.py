"""Shared feature types, configuration and utterance pooling."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import ParameterError

METHODS = ("mfcc_dd", "mfcc", "lpc", "dwpd", "dct")


@dataclass(frozen=True)
class FeatureConfig:
    """Analysis parameters shared by all extractors."""

    frame_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hamming"
    n_fft: int | None = None  # next power of two >= frame length
    pre_emphasis: float = 0.97
    n_filters: int = 26
    n_mfcc: int = 13
    fmin: float = 0.0
    fmax: float | None = None  # Nyquist
    log_floor: float = 1e-10
    delta_width: int = 2
    lpc_order: int = 12
    dwpd_depth: int = 3
    wavelet: str = "db4"
    n_dct: int = 13

    def replace(self, **changes) -> "FeatureConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class FeatureMatrix:
    vectors: np.ndarray  # (n_frames, dim)
    method: str
    frame_ms: float
    hop_ms: float
    sample_rate: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ParameterError("feature vectors must be a 2-D matrix")
        if not np.all(np.isfinite(v)):
            raise ParameterError(f"non-finite {self.method} features")
        object.__setattr__(self, "vectors", v)

    @property
    def n_frames(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def pool_utterance(features: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Per-dimension mean followed by population standard deviation."""
    v = features.vectors if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if v.ndim != 2 or v.shape[0] == 0:
        raise ParameterError("cannot pool an empty feature matrix")
    return np.concatenate([v.mean(axis=0), v.std(axis=0)])


def write_feature_csv(fm: FeatureMatrix, path) -> None:
    """Dump one row per frame after a ``# method,dim,frame_ms,hop_ms,sample_rate`` line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {fm.method},{fm.dim},{fm.frame_ms!r},{fm.hop_ms!r},{fm.sample_rate}\n")
        for row in fm.vectors:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def read_feature_csv(path) -> FeatureMatrix:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParameterError(f"{path}: missing feature header line")
    method, dim, frame_ms, hop_ms, rate = (s.strip() for s in lines[0][1:].split(","))
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:] if ln.strip()]
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), int(dim))
    return FeatureMatrix(vectors, method, float(frame_ms), float(hop_ms), int(rate))
