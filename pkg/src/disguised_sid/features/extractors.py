"""Scikit-learn transformers that turn audio clips into pooled utterance embeddings.

Each transformer takes a sequence of :class:`AudioClip` and returns an
``(n_clips, 2 * dim)`` array of per-dimension means and standard deviations,
so it can be placed in front of any classifier in a ``Pipeline``::

    make_pipeline(MfccDeltaDelta(), SMOClassifier())
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..audio_io import AudioClip
from .base import FeatureConfig, FeatureMatrix, pool_utterance
from .dct import dct_features
from .lpc import lpc_features
from .mfcc import mfcc_delta_delta, mfcc_static
from .wavelet import dwpd_features


def check_clips(X) -> list[AudioClip]:
    clips = list(X)
    if not clips:
        raise ValueError("expected at least one clip")
    for i, c in enumerate(clips):
        if not isinstance(c, AudioClip):
            raise TypeError(f"item {i} is {type(c).__name__}, expected AudioClip")
    return clips


class _PooledExtractor(TransformerMixin, BaseEstimator):
    method = ""

    def config(self) -> FeatureConfig:
        params = {k: v for k, v in self.get_params().items() if k in FeatureConfig.__dataclass_fields__}
        return FeatureConfig(**params)

    def extract(self, clip: AudioClip) -> FeatureMatrix:
        raise NotImplementedError

    def fit(self, X, y=None):
        clips = check_clips(X)
        self.n_frame_features_ = self.extract(clips[0]).dim
        return self

    def transform(self, X) -> np.ndarray:
        return np.vstack([pool_utterance(self.extract(c)) for c in check_clips(X)])


class MfccDeltaDelta(_PooledExtractor):
    """Static MFCCs concatenated with their deltas and delta-deltas."""

    method = "mfcc_dd"

    def __init__(self, n_mfcc=13, n_filters=26, frame_ms=25.0, hop_ms=10.0,
                 pre_emphasis=0.97, fmin=0.0, fmax=None, delta_width=2, log_floor=1e-10):
        self.n_mfcc = n_mfcc
        self.n_filters = n_filters
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.pre_emphasis = pre_emphasis
        self.fmin = fmin
        self.fmax = fmax
        self.delta_width = delta_width
        self.log_floor = log_floor

    def extract(self, clip):
        return mfcc_delta_delta(clip, self.config())


class Mfcc(MfccDeltaDelta):
    """Static MFCCs only."""

    method = "mfcc"

    def extract(self, clip):
        return mfcc_static(clip, self.config())


class LpcExtractor(_PooledExtractor):
    method = "lpc"

    def __init__(self, lpc_order=12, frame_ms=25.0, hop_ms=10.0):
        self.lpc_order = lpc_order
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms

    def extract(self, clip):
        return lpc_features(clip, cfg=self.config())


class DwpdExtractor(_PooledExtractor):
    """DWT-chain and wavelet-packet log subband energies."""

    method = "dwpd"

    def __init__(self, dwpd_depth=3, wavelet="db4", frame_ms=25.0, hop_ms=10.0, log_floor=1e-10):
        self.dwpd_depth = dwpd_depth
        self.wavelet = wavelet
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.log_floor = log_floor

    def extract(self, clip):
        return dwpd_features(clip, cfg=self.config())


class DctExtractor(_PooledExtractor):
    method = "dct"

    def __init__(self, n_dct=13, frame_ms=25.0, hop_ms=10.0):
        self.n_dct = n_dct
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms

    def extract(self, clip):
        return dct_features(clip, cfg=self.config())


EXTRACTORS = {
    cls.method: cls for cls in (MfccDeltaDelta, Mfcc, LpcExtractor, DwpdExtractor, DctExtractor)
}


def make_extractor(method: str, cfg: FeatureConfig | None = None) -> _PooledExtractor:
    """Build the transformer for ``method`` with parameters taken from ``cfg``."""
    try:
        cls = EXTRACTORS[method]
    except KeyError:
        raise ValueError(f"unknown feature method {method!r}") from None
    cfg = cfg or FeatureConfig()
    est = cls()
    values = cfg.as_dict()
    return est.set_params(**{k: values[k] for k in est.get_params() if k in values})
