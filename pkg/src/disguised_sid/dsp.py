"""Framing, windowing, radix-2 FFT power spectra and autocorrelation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .exceptions import ParameterError, TooShortError

DEFAULT_FRAME_MS = 25.0
DEFAULT_HOP_MS = 10.0
WINDOWS = ("hamming", "rectangular")


@dataclass(frozen=True)
class FrameMatrix:
    frames: np.ndarray  # (n_frames, frame_len), already windowed
    frame_len: int
    hop: int
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def ms_to_samples(ms: float, sample_rate: int) -> int:
    return int(round(ms * sample_rate / 1000.0))


def hamming(length: int) -> np.ndarray:
    if length == 1:
        return np.ones(1)
    n = np.arange(length)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / (length - 1))


def frame_count(signal_len: int, frame_len: int, hop: int) -> int:
    if signal_len < frame_len:
        return 0
    return (signal_len - frame_len) // hop + 1


def frame_array(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Strided (n_frames, frame_len) copy of ``x``; no window applied."""
    n = frame_count(len(x), frame_len, hop)
    if n == 0:
        raise TooShortError(f"signal of {len(x)} samples is shorter than one frame ({frame_len})")
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n)[:, None]
    return x[idx]


def frame_signal(
    clip: AudioClip,
    frame_ms: float = DEFAULT_FRAME_MS,
    hop_ms: float = DEFAULT_HOP_MS,
    window: str = "hamming",
) -> FrameMatrix:
    """Cut ``clip`` into overlapping frames; row i starts at sample i*hop."""
    if window not in WINDOWS:
        raise ParameterError(f"unknown window {window!r}")
    if not frame_ms >= hop_ms > 0:
        raise ParameterError("need frame_ms >= hop_ms > 0")
    frame_len = ms_to_samples(frame_ms, clip.sample_rate)
    hop = max(1, ms_to_samples(hop_ms, clip.sample_rate))
    frames = frame_array(clip.samples, frame_len, hop)
    if window == "hamming":
        frames = frames * hamming(frame_len)
    return FrameMatrix(frames, frame_len, hop, clip.sample_rate)


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft(x) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT along the last axis."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if not _is_pow2(n):
        raise ParameterError(f"FFT length {n} is not a power of two")
    lead = x.shape[:-1]
    x = x[..., _bit_reverse_indices(n)]
    m = 2
    while m <= n:
        half = m // 2
        blocks = x.reshape(lead + (n // m, m))
        twiddle = np.exp(-2j * np.pi * np.arange(half) / m)
        even = blocks[..., :half]
        odd = blocks[..., half:] * twiddle
        x = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        m *= 2
    return x


def power_spectrum(frame, n_fft: int) -> np.ndarray:
    """|FFT_k|^2 for k = 0..n_fft/2 of the zero-padded frame(s).

    Accepts a single frame or a 2-D stack of frames.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if not _is_pow2(n_fft):
        raise ParameterError(f"n_fft={n_fft} is not a power of two")
    if frame.shape[-1] > n_fft:
        raise ParameterError(f"frame length {frame.shape[-1]} exceeds n_fft={n_fft}")
    pad = [(0, 0)] * (frame.ndim - 1) + [(0, n_fft - frame.shape[-1])]
    spec = fft(np.pad(frame, pad))[..., : n_fft // 2 + 1]
    return spec.real**2 + spec.imag**2


def autocorrelation(frame, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r(0..max_lag) of a frame or a stack of frames."""
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[-1]
    if max_lag < 0 or max_lag >= n:
        raise ParameterError(f"max_lag={max_lag} must be in [0, {n})")
    r = np.empty(frame.shape[:-1] + (max_lag + 1,))
    for lag in range(max_lag + 1):
        r[..., lag] = np.sum(frame[..., : n - lag] * frame[..., lag:], axis=-1)
    return r


def pre_emphasis(x: np.ndarray, coeff: float) -> np.ndarray:
    if coeff == 0:
        return np.asarray(x, dtype=np.float64)
    return np.append(x[0], x[1:] - coeff * x[:-1])
