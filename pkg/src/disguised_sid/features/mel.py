"""Mel scale conversion and triangular filterbanks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ParameterError


def hz_to_mel(f):
    """2595 * log10(1 + f / 700). Accepts scalars or arrays."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ParameterError("frequency must be non-negative")
    m = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(m) if m.ndim == 0 else m


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ParameterError("mel value must be non-negative")
    f = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(f) if f.ndim == 0 else f


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # (n_filters, n_fft // 2 + 1)
    centers_hz: np.ndarray
    edges_hz: np.ndarray
    n_fft: int
    sample_rate: int

    def apply(self, power: np.ndarray) -> np.ndarray:
        return power @ self.weights.T


def mel_filterbank(
    n_filters: int,
    n_fft: int,
    sample_rate: int,
    fmin: float = 0.0,
    fmax: float | None = None,
) -> MelFilterbank:
    """Triangles with unit peaks on ``n_filters + 2`` mel-spaced edges.

    Filter i rises from edge i to a peak at edge i+1 and falls to edge i+2.
    Edges are snapped to the nearest FFT bin.
    """
    nyquist = sample_rate / 2.0
    if fmax is None:
        fmax = nyquist
    if n_filters < 1:
        raise ParameterError("n_filters must be >= 1")
    if fmax > nyquist:
        raise ParameterError(f"fmax={fmax} exceeds Nyquist {nyquist}")
    if not 0 <= fmin < fmax:
        raise ParameterError("need 0 <= fmin < fmax")

    edge_mels = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_filters + 2)
    edges_hz = mel_to_hz(edge_mels)
    bins = np.round(edges_hz * n_fft / sample_rate).astype(int)
    n_bins = n_fft // 2 + 1
    k = np.arange(n_bins)
    weights = np.zeros((n_filters, n_bins))
    for i in range(n_filters):
        lo, mid, hi = bins[i], bins[i + 1], bins[i + 2]
        if lo == mid or mid == hi:
            raise ParameterError(
                f"mel filter {i} is degenerate (edges share an FFT bin); "
                "use fewer filters or a larger n_fft"
            )
        rise = (k - lo) / (mid - lo)
        fall = (hi - k) / (hi - mid)
        weights[i] = np.clip(np.minimum(rise, fall), 0.0, None)
    return MelFilterbank(weights, edges_hz[1:-1], edges_hz, n_fft, sample_rate)
