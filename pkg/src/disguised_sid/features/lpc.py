"""Linear prediction coefficients via the Levinson-Durbin recursion.

Coefficients follow the predictor s_hat[n] = -sum_k a_k s[n-k], so a frame
generated by s[n] = 0.9 s[n-1] yields a_1 = -0.9.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..audio_io import AudioClip
from ..dsp import autocorrelation, frame_signal
from ..exceptions import ParameterError
from .base import FeatureConfig, FeatureMatrix


class LevinsonResult(NamedTuple):
    a: np.ndarray  # (..., p) predictor coefficients
    reflection: np.ndarray  # (..., p)
    error: np.ndarray  # (...) final prediction error power
    flagged: np.ndarray  # (...) bool, zero-energy or unstable recursion


def levinson_durbin(r, order: int) -> LevinsonResult:
    """Solve the Toeplitz normal equations for one or many autocorrelation rows.

    ``r`` has shape (..., >= order + 1). Rows with r(0) == 0 or a reflection
    coefficient of magnitude >= 1 are flagged and get a zero coefficient vector.
    """
    r = np.asarray(r, dtype=np.float64)
    if order < 1:
        raise ParameterError("LPC order must be >= 1")
    if r.shape[-1] < order + 1:
        raise ParameterError(f"need {order + 1} autocorrelation lags, got {r.shape[-1]}")
    lead = r.shape[:-1]
    r2 = r.reshape(-1, r.shape[-1])
    n = r2.shape[0]

    flagged = ~(r2[:, 0] > 0)
    err = np.where(flagged, 1.0, r2[:, 0])
    a = np.zeros((n, order))
    k = np.zeros((n, order))
    for i in range(order):
        acc = r2[:, i + 1] + np.einsum("nj,nj->n", a[:, :i], r2[:, i:0:-1])
        ki = -acc / err
        bad = ~(np.abs(ki) < 1.0)
        ki = np.where(flagged | bad, 0.0, ki)
        flagged |= bad
        prev = a[:, :i].copy()
        a[:, :i] = prev + ki[:, None] * prev[:, ::-1]
        a[:, i] = ki
        k[:, i] = ki
        err = err * (1.0 - ki * ki)
    a[flagged] = 0.0
    err = np.where(flagged, 0.0, err)
    return LevinsonResult(
        a.reshape(lead + (order,)),
        k.reshape(lead + (order,)),
        err.reshape(lead),
        flagged.reshape(lead),
    )


def lpc_coefficients(frame, order: int) -> np.ndarray:
    """LPC coefficients of a single frame (or stack) by the autocorrelation method."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] <= order:
        raise ParameterError("frame length must exceed the LPC order")
    return levinson_durbin(autocorrelation(frame, order), order).a


def lpc_features(clip: AudioClip, p: int | None = None, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    cfg = cfg or FeatureConfig()
    p = cfg.lpc_order if p is None else p
    if p < 1:
        raise ParameterError("LPC order must be >= 1")
    fr = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, cfg.window)
    if fr.frame_len <= p:
        raise ParameterError("frame length must exceed the LPC order")
    res = levinson_durbin(autocorrelation(fr.frames, p), p)
    return FeatureMatrix(
        res.a, "lpc", cfg.frame_ms, cfg.hop_ms, clip.sample_rate,
        meta={"flagged_frames": int(res.flagged.sum())},
    )
