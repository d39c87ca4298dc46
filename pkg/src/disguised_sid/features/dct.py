"""Orthonormal DCT-II and frame-level DCT features."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..audio_io import AudioClip
from ..dsp import frame_signal
from ..exceptions import ParameterError
from .base import FeatureConfig, FeatureMatrix


@lru_cache(maxsize=32)
def _dct_matrix(n: int, n_out: int) -> np.ndarray:
    m = np.arange(n_out)[:, None]
    k = np.arange(n)[None, :]
    c = np.where(m == 0, 1.0 / np.sqrt(2.0), 1.0)
    mat = np.sqrt(2.0 / n) * c * np.cos((2 * k + 1) * m * np.pi / (2 * n))
    mat.setflags(write=False)
    return mat


def dct_matrix(n: int, n_out: int | None = None) -> np.ndarray:
    """Rows m = 0..n_out-1 of the orthonormal DCT-II analysis matrix.

    X(m) = sqrt(2/N) C_m sum_n x(n) cos((2n+1) m pi / 2N), C_0 = 1/sqrt(2).
    """
    n_out = n if n_out is None else n_out
    if not 1 <= n_out <= n:
        raise ParameterError(f"need 1 <= n_out <= {n}, got {n_out}")
    return _dct_matrix(int(n), int(n_out))


def dct(x, n_out: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x @ dct_matrix(x.shape[-1], n_out).T


def idct(coeffs) -> np.ndarray:
    """Inverse of the full-length orthonormal DCT-II (its transpose)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return coeffs @ dct_matrix(coeffs.shape[-1])


def dct_features(clip: AudioClip, n_coeffs: int | None = None, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    cfg = cfg or FeatureConfig()
    n_coeffs = cfg.n_dct if n_coeffs is None else n_coeffs
    fr = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, cfg.window)
    if n_coeffs > fr.frame_len:
        raise ParameterError(f"n_coeffs={n_coeffs} exceeds frame length {fr.frame_len}")
    return FeatureMatrix(dct(fr.frames, n_coeffs), "dct", cfg.frame_ms, cfg.hop_ms, clip.sample_rate)
