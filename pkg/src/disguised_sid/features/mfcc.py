"""MFCCs with delta and delta-delta (acceleration) coefficients."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..audio_io import AudioClip
from ..dsp import frame_signal, next_pow2, power_spectrum, pre_emphasis
from ..exceptions import ParameterError
from .base import FeatureConfig, FeatureMatrix
from .dct import dct
from .mel import mel_filterbank

DEFAULT_DELTA_WIDTH = 2


@lru_cache(maxsize=16)
def _cached_filterbank(n_filters, n_fft, sample_rate, fmin, fmax):
    return mel_filterbank(n_filters, n_fft, sample_rate, fmin, fmax)


def mfcc_static(clip: AudioClip, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    """Static MFCCs: power spectrum -> mel energies -> floored log -> DCT-II."""
    cfg = cfg or FeatureConfig()
    if cfg.n_mfcc > cfg.n_filters:
        raise ParameterError("n_mfcc cannot exceed n_filters")
    emphasized = clip if cfg.pre_emphasis == 0 else AudioClip(
        pre_emphasis(clip.samples, cfg.pre_emphasis), clip.sample_rate
    )
    fr = frame_signal(emphasized, cfg.frame_ms, cfg.hop_ms, cfg.window)
    n_fft = cfg.n_fft or next_pow2(fr.frame_len)
    fb = _cached_filterbank(cfg.n_filters, n_fft, clip.sample_rate, cfg.fmin, cfg.fmax)
    energies = fb.apply(power_spectrum(fr.frames, n_fft))
    log_e = np.log(np.maximum(energies, cfg.log_floor))
    coeffs = dct(log_e, cfg.n_mfcc)
    return FeatureMatrix(coeffs, "mfcc", cfg.frame_ms, cfg.hop_ms, clip.sample_rate)


def delta(coeffs, N: int = DEFAULT_DELTA_WIDTH) -> np.ndarray:
    """Regression deltas over +-N frames, edges padded by replication.

    d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2)
    """
    if N < 1:
        raise ParameterError("delta width N must be >= 1")
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1:
        raise ParameterError("coeffs must be a non-empty (n_frames, d) matrix")
    T = c.shape[0]
    padded = np.pad(c, ((N, N), (0, 0)), mode="edge")
    num = np.zeros_like(c)
    for n in range(1, N + 1):
        num += n * (padded[N + n : N + n + T] - padded[N - n : N - n + T])
    return num / (2.0 * sum(n * n for n in range(1, N + 1)))


def mfcc_delta_delta(clip: AudioClip, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    """[static | delta | delta-delta] per frame; dim = 3 * n_mfcc."""
    cfg = cfg or FeatureConfig()
    static = mfcc_static(clip, cfg)
    d1 = delta(static.vectors, cfg.delta_width)
    d2 = delta(d1, cfg.delta_width)
    return FeatureMatrix(
        np.hstack([static.vectors, d1, d2]), "mfcc_dd", cfg.frame_ms, cfg.hop_ms, clip.sample_rate
    )
