"""Orthonormal DWT steps, wavelet packet trees and the hybrid DWPD features."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..audio_io import AudioClip
from ..dsp import frame_signal
from ..exceptions import ParameterError
from .base import FeatureConfig, FeatureMatrix

_SQRT_HALF = np.sqrt(0.5)

# Scaling (low-pass) filters; the high-pass is the alternating flip.
SCALING_FILTERS = {
    "haar": np.array([_SQRT_HALF, _SQRT_HALF]),
    "db4": np.array([
        0.23037781330889650086,
        0.71484657055291564709,
        0.63088076792985890788,
        -0.027983769416859854211,
        -0.18703481171909308408,
        0.030841381835560763627,
        0.032883011666885199735,
        -0.010597401785069032105,
    ]),
}


def filter_pair(wavelet: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        h = SCALING_FILTERS[wavelet]
    except KeyError:
        raise ParameterError(f"unknown wavelet {wavelet!r}") from None
    g = h[::-1] * (-1.0) ** np.arange(len(h))
    return h, g


@lru_cache(maxsize=64)
def _periodic_index(n: int, taps: int) -> np.ndarray:
    return (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n


def dwt_step(signal, wavelet: str = "haar", return_padding: bool = False):
    """One analysis level with periodic extension: (approx, detail).

    Works along the last axis, so a stack of frames is split in one call.
    Odd-length input gets one trailing zero; pass ``return_padding=True``
    to also receive whether that happened.
    """
    h, g = filter_pair(wavelet)
    x = np.asarray(signal, dtype=np.float64)
    padded = x.shape[-1] % 2 == 1
    if padded:
        x = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
    if x.shape[-1] == 0:
        raise ParameterError("cannot transform an empty signal")
    windows = x[..., _periodic_index(x.shape[-1], len(h))]
    approx, detail = windows @ h, windows @ g
    if return_padding:
        return approx, detail, padded
    return approx, detail


def analysis_matrix(n: int, wavelet: str = "haar") -> np.ndarray:
    """(n, n) matrix whose first n/2 rows give the approx band, the rest the detail."""
    if n < 2 or n % 2:
        raise ParameterError("analysis matrix needs an even length >= 2")
    h, g = filter_pair(wavelet)
    idx = _periodic_index(n, len(h))
    W = np.zeros((n, n))
    rows = np.arange(n // 2)
    for t in range(len(h)):
        np.add.at(W, (rows, idx[:, t]), h[t])
        np.add.at(W, (rows + n // 2, idx[:, t]), g[t])
    return W


def idwt_step(approx, detail, wavelet: str = "haar") -> np.ndarray:
    """Single-level synthesis: the transpose of the orthonormal analysis."""
    coeffs = np.concatenate([np.asarray(approx, float), np.asarray(detail, float)], axis=-1)
    return coeffs @ analysis_matrix(coeffs.shape[-1], wavelet)


def dwt_chain(signal, depth: int, wavelet: str = "haar") -> list[np.ndarray]:
    """[detail_1, ..., detail_depth, approx_depth], recursing on the low band only."""
    _check_depth(signal, depth)
    out = []
    a = np.asarray(signal, dtype=np.float64)
    for _ in range(depth):
        a, d = dwt_step(a, wavelet)
        out.append(d)
    out.append(a)
    return out


def wpd_decompose(signal, depth: int, wavelet: str = "haar") -> list[np.ndarray]:
    """All 2**depth packet leaves, ordered by tree path (approx branch first)."""
    _check_depth(signal, depth)
    nodes = [np.asarray(signal, dtype=np.float64)]
    for _ in range(depth):
        nxt = []
        for node in nodes:
            nxt.extend(dwt_step(node, wavelet))
        nodes = nxt
    return nodes


def _check_depth(signal, depth):
    if depth < 1:
        raise ParameterError("depth must be >= 1")
    n = np.shape(signal)[-1]
    if n < 2**depth:
        raise ParameterError(f"signal of length {n} is too short for depth {depth}")


def _log_energy(x, floor):
    return np.log(np.maximum(np.sum(x * x, axis=-1), floor))


def dwpd_frame_features(frames, depth: int, wavelet: str, log_floor: float = 1e-10) -> np.ndarray:
    """Log-energies of the DWT chain (depth + 1) followed by the WPD leaves (2**depth)."""
    chain = dwt_chain(frames, depth, wavelet)
    leaves = wpd_decompose(frames, depth, wavelet)
    cols = [_log_energy(c, log_floor) for c in chain] + [_log_energy(l, log_floor) for l in leaves]
    return np.stack(cols, axis=-1)


def dwpd_features(
    clip: AudioClip,
    depth: int | None = None,
    wavelet: str | None = None,
    cfg: FeatureConfig | None = None,
) -> FeatureMatrix:
    cfg = cfg or FeatureConfig()
    depth = cfg.dwpd_depth if depth is None else depth
    wavelet = cfg.wavelet if wavelet is None else wavelet
    filter_pair(wavelet)
    fr = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, cfg.window)
    feats = dwpd_frame_features(fr.frames, depth, wavelet, cfg.log_floor)
    return FeatureMatrix(
        feats, "dwpd", cfg.frame_ms, cfg.hop_ms, clip.sample_rate,
        meta={"depth": depth, "wavelet": wavelet},
    )
