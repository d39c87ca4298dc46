"""Voice-disguise effects: pitch raising/lowering and ring-modulated "electronic" voice."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from .audio_io import AudioClip
from .exceptions import ParameterError, TooShortError, UnvoicedError

EFFECTS = ("none", "high_pitched", "low_pitched", "evc")
EFFECT_ALIASES = {"high": "high_pitched", "low": "low_pitched"}
DEFAULT_SEMITONES = 4.0
DEFAULT_CARRIER_HZ = 50.0

MIN_CLIP_S = 0.1
GRAIN_MS = 50.0
SEARCH_MS = 5.0
SUBHARMONIC_MARGIN = 0.9


def canonical_effect(name: str) -> str:
    name = EFFECT_ALIASES.get(name, name)
    if name not in EFFECTS:
        raise ParameterError(f"unknown effect {name!r}; choose from {', '.join(EFFECTS)}")
    return name


@dataclass(frozen=True)
class DisguiseSpec:
    effect: str = "none"
    semitones: float = 0.0
    carrier_hz: float = DEFAULT_CARRIER_HZ

    def __post_init__(self):
        object.__setattr__(self, "effect", canonical_effect(self.effect))
        if self.effect == "high_pitched" and not self.semitones > 0:
            raise ParameterError("high_pitched needs semitones > 0")
        if self.effect == "low_pitched" and not self.semitones < 0:
            raise ParameterError("low_pitched needs semitones < 0")
        if not 10.0 < self.carrier_hz < 500.0:
            raise ParameterError("carrier_hz must lie in (10, 500)")

    @classmethod
    def default(cls, effect: str, semitones: float = DEFAULT_SEMITONES,
                carrier_hz: float = DEFAULT_CARRIER_HZ) -> "DisguiseSpec":
        """Spec for ``effect`` with a magnitude of ``semitones`` (sign set by the effect)."""
        effect = canonical_effect(effect)
        shift = {"high_pitched": abs(semitones), "low_pitched": -abs(semitones)}.get(effect, 0.0)
        return cls(effect, shift, carrier_hz)

    def apply(self, clip: AudioClip) -> AudioClip:
        if self.effect in ("high_pitched", "low_pitched"):
            return pitch_shift(clip, self.semitones)
        if self.effect == "evc":
            return evc_transform(clip, self.carrier_hz)
        return clip


def _limit_peak(y: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(y)) if y.size else 0.0
    return y / peak if peak > 1.0 else y


def _periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def wsola_stretch(x: np.ndarray, n_out: int, grain: int, tolerance: int) -> np.ndarray:
    """Waveform-similarity overlap-add to exactly ``n_out`` samples.

    Hann grains at 50% overlap; each grain is shifted by up to ``tolerance``
    samples to best match the natural continuation of the previous grain.
    """
    grain += grain % 2
    hop = grain // 2
    window = _periodic_hann(grain)
    ana_hop = hop * len(x) / n_out
    lead = hop + tolerance
    xp = np.concatenate([np.zeros(lead), x, np.zeros(grain + 2 * tolerance + int(np.ceil(ana_hop)) + hop)])
    n_grains = int(np.ceil(n_out / hop)) + 2
    need = int(round((n_grains + 1) * ana_hop)) + lead + grain + 2 * tolerance + hop
    if xp.size < need:
        xp = np.concatenate([xp, np.zeros(need - xp.size)])
    sq = np.concatenate([[0.0], np.cumsum(xp * xp)])

    y = np.zeros(n_grains * hop + grain)
    offset = 0
    for k in range(n_grains):
        start = int(round(k * ana_hop)) + tolerance + offset
        y[k * hop : k * hop + grain] += window * xp[start : start + grain]
        natural = xp[start + hop : start + hop + grain]
        base = int(round((k + 1) * ana_hop))
        region = xp[base : base + grain + 2 * tolerance]
        corr = np.correlate(region, natural, mode="valid")
        energy = sq[base + grain : base + grain + 2 * tolerance + 1] - sq[base : base + 2 * tolerance + 1]
        norm = np.sqrt(np.maximum(energy, 1e-20))
        offset = int(np.argmax(corr / norm)) - tolerance if np.any(natural) else 0
    return y[hop : hop + n_out]


def pitch_shift(clip: AudioClip, semitones: float) -> AudioClip:
    """Scale the pitch by 2**(semitones/12) while keeping the duration.

    The signal is resampled by the pitch ratio and then time-stretched back to
    its original length. Formants move along with the pitch.
    """
    if abs(semitones) > 12:
        raise ParameterError("|semitones| must be <= 12")
    sr = clip.sample_rate
    if clip.duration < MIN_CLIP_S:
        raise TooShortError(f"clip of {clip.duration:.3f} s is shorter than {MIN_CLIP_S} s")
    grain = int(round(GRAIN_MS * sr / 1000.0))
    tolerance = int(round(SEARCH_MS * sr / 1000.0))
    ratio = Fraction(2.0 ** (semitones / 12.0)).limit_denominator(1000)
    x = clip.samples
    if ratio != 1:
        x = resample_poly(x, ratio.denominator, ratio.numerator)
    if x.size < grain // 2:
        raise TooShortError("clip too short for one stretch grain")
    y = wsola_stretch(x, len(clip), grain, tolerance)
    return AudioClip(_limit_peak(y), sr)


def evc_transform(clip: AudioClip, carrier_hz: float = DEFAULT_CARRIER_HZ) -> AudioClip:
    """Ring modulation by a sine carrier, rescaled to the input's peak level."""
    if not 10.0 < carrier_hz < 500.0:
        raise ParameterError("carrier_hz must lie in (10, 500)")
    t = np.arange(len(clip)) / clip.sample_rate
    y = clip.samples * np.sin(2.0 * np.pi * carrier_hz * t)
    peak_in = np.max(np.abs(clip.samples))
    peak_out = np.max(np.abs(y))
    if peak_out > 0:
        y = y * (peak_in / peak_out)
    return AudioClip(_limit_peak(y), clip.sample_rate)


def normalized_autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Correlation coefficient between x[:-lag] and x[lag:] for lag = 0..max_lag."""
    n = x.size
    nfft = 1 << int(2 * n - 1).bit_length()
    spec = np.fft.rfft(x, nfft)
    r = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    sq = np.concatenate([[0.0], np.cumsum(x * x)])
    lags = np.arange(max_lag + 1)
    head = sq[n - lags]  # energy of x[:n-lag]
    tail = sq[n] - sq[lags]  # energy of x[lag:]
    return r / np.sqrt(np.maximum(head * tail, 1e-300))


def _parabolic_peak(nac, lag):
    """Vertex offset and height of the parabola through nac[lag-1..lag+1]."""
    y0, y1, y2 = nac[lag - 1], nac[lag], nac[lag + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return 0.0, float(y1)
    shift = float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))
    return shift, float(y1 - 0.25 * (y0 - y2) * shift)


def _frame_f0(x, sr, lo, hi, threshold):
    nac = normalized_autocorrelation(x - x.mean(), hi + 1)
    search = nac[lo : hi + 1]
    best = float(search.max())
    if not best >= threshold:
        return None, best
    # refined heights, so a period falling between integer lags is not
    # out-scored by a multiple that happens to land on one
    peaks = [(lag, *_parabolic_peak(nac, lag)) for lag in range(lo, hi + 1)
             if nac[lag] >= nac[lag - 1] and nac[lag] >= nac[lag + 1]]
    if not peaks:
        return None, best
    top = max(h for _, _, h in peaks)
    lag, shift, _ = next(p for p in peaks if p[2] >= SUBHARMONIC_MARGIN * top)
    return sr / (lag + shift), best


def estimate_f0(
    clip: AudioClip,
    fmin: float = 60.0,
    fmax: float = 500.0,
    threshold: float = 0.3,
    frame_ms: float = 60.0,
    hop_ms: float = 20.0,
) -> float:
    """Fundamental frequency from normalized autocorrelation peaks.

    Each ``frame_ms`` frame is searched over the lags for ``fmin..fmax``;
    the shortest local maximum within 90% of the frame's best peak wins
    (guards against period multiples) and is refined parabolically. Frames
    whose best peak is below ``threshold`` count as unvoiced. Returns the
    median over voiced frames.
    """
    sr = clip.sample_rate
    if clip.duration < MIN_CLIP_S:
        raise TooShortError(f"clip of {clip.duration:.3f} s is shorter than {MIN_CLIP_S} s")
    lo = max(1, int(np.floor(sr / fmax)))
    hi = int(np.ceil(sr / fmin))
    frame = max(int(round(frame_ms * sr / 1000.0)), 2 * (hi + 2))
    hop = max(1, int(round(hop_ms * sr / 1000.0)))
    x = clip.samples
    if x.size < frame:
        frame = x.size
        if frame < hi + 3:
            raise TooShortError("clip too short for the lowest f0")
    estimates = []
    best = 0.0
    for start in range(0, x.size - frame + 1, hop):
        f0, peak = _frame_f0(x[start : start + frame], sr, lo, hi, threshold)
        best = max(best, peak)
        if f0 is not None:
            estimates.append(f0)
    if not estimates:
        raise UnvoicedError(f"peak normalized autocorrelation {best:.3f} below {threshold}")
    return float(np.median(estimates))
