"""Deterministic source-filter speech corpus with the speakers x sentences x emotions layout.

Every speaker records sentences 1-4 nine times in neutral (training) and
sentences 5-8 nine times in each of six emotions (testing).
"""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter, sosfilt

from .audio_io import EMOTIONS, AudioClip, UtteranceRecord, write_manifest, write_wav
from .exceptions import ParameterError

SAMPLE_RATE = 16000
F0_RANGE = (90.0, 250.0)
MIN_F0_GAP = 4.0
MIN_FORMANT_GAP = 50.0
TRAIN_SENTENCES = (1, 2, 3, 4)
TEST_SENTENCES = (5, 6, 7, 8)
REPETITIONS = 9
BASE_DURATION_S = 1.3
CYCLE_JITTER = 0.003
BREATH_NOISE = 0.03  # aspiration noise relative to the pulse train
VOCAL_TRACT_SPREAD = 0.20  # per-speaker uniform formant scale, +/-
FORMANT_SPREAD = 0.15  # independent per-formant perturbation, +/-
CANDIDATES_PER_SPEAKER = 64
BANDWIDTH_RANGE = ((120.0, 150.0, 200.0), (200.0, 250.0, 320.0))
TILT_RANGE = (0.60, 0.97)


@dataclass(frozen=True)
class SpeakerProfile:
    speaker_id: str
    f0_base: float
    formants: tuple[float, float, float]
    bandwidths: tuple[float, float, float]
    gain: float
    tilt: float = 0.9  # one-pole glottal low-pass coefficient

    def __post_init__(self):
        if not F0_RANGE[0] <= self.f0_base <= F0_RANGE[1]:
            raise ParameterError(f"f0_base {self.f0_base} outside {F0_RANGE}")
        f = self.formants
        if not (0 < f[0] < f[1] < f[2] < SAMPLE_RATE / 2):
            raise ParameterError("formants must be strictly increasing and below Nyquist")


@dataclass(frozen=True)
class EmotionModifier:
    emotion: str
    f0_scale: float
    rate_scale: float
    jitter: float


EMOTION_MODIFIERS = {
    "neutral": EmotionModifier("neutral", 1.00, 1.00, 0.005),
    "anger": EmotionModifier("anger", 1.30, 1.15, 0.04),
    "sad": EmotionModifier("sad", 0.85, 0.90, 0.01),
    "happy": EmotionModifier("happy", 1.20, 1.10, 0.03),
    "fear": EmotionModifier("fear", 1.15, 1.20, 0.05),
    "disgust": EmotionModifier("disgust", 0.95, 0.95, 0.02),
}

# Formant multipliers relative to a speaker's neutral vocal tract. F3 moves
# little between vowels, so it carries most of the speaker identity.
VOWELS = {
    "a": (1.45, 0.85, 0.98),
    "i": (0.55, 1.50, 1.06),
    "u": (0.60, 0.60, 0.96),
    "e": (0.90, 1.30, 1.03),
    "o": (1.00, 0.62, 0.97),
    "@": (1.00, 1.00, 1.00),
}

SENTENCE_VOWELS = {
    1: "aie@o",
    2: "uaei",
    3: "oia@ue",
    4: "e@ua",
    5: "iouae",
    6: "a@eio",
    7: "ueoa",
    8: "@aiuo",
}


def _rng(seed: int, *keys) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(str(k).encode()) if not isinstance(k, int) else k & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))


def make_profiles(n_speakers: int, seed: int = 0) -> list[SpeakerProfile]:
    """Speaker profiles with pairwise-separated f0 and formants.

    f0 values sit on a jittered grid over 90-250 Hz, so neighbours differ by
    at least min(4 Hz, grid spacing). The lower half of the grid is "male"
    (longer vocal tract). Formant sets are drawn best-candidate style, so
    small casts are spread widely; every pair differs by >= 50 Hz in some
    formant regardless of cast size.
    """
    if n_speakers < 1:
        raise ParameterError("n_speakers must be >= 1")
    rng = _rng(seed, "profiles")
    lo, hi = F0_RANGE
    if n_speakers == 1:
        grid = np.array([(lo + hi) / 2])
        gap = 0.0
    else:
        grid = np.linspace(lo, hi, n_speakers)
        gap = grid[1] - grid[0]
    min_gap = min(MIN_F0_GAP, gap)
    slack = max(0.0, (gap - min_gap) / 2.0)
    f0s = grid + rng.uniform(-slack, slack, n_speakers)
    f0s = np.clip(f0s, lo, hi)
    order = rng.permutation(n_speakers)

    profiles: list[SpeakerProfile] = []
    for idx in range(n_speakers):
        f0 = float(f0s[order[idx]])
        female = order[idx] >= n_speakers / 2
        formants = _pick_formants(rng, female, [np.array(p.formants) for p in profiles])
        profiles.append(SpeakerProfile(
            speaker_id=f"spk{idx + 1:02d}",
            f0_base=round(f0, 3),
            formants=tuple(round(float(f), 2) for f in formants),
            bandwidths=tuple(round(float(b), 2) for b in rng.uniform(*BANDWIDTH_RANGE)),
            gain=round(float(rng.uniform(0.6, 1.0)), 4),
            tilt=round(float(rng.uniform(*TILT_RANGE)), 4),
        ))
    return profiles


def _pick_formants(rng, female, taken, n_candidates=CANDIDATES_PER_SPEAKER):
    base_male = np.array([520.0, 1480.0, 2500.0])
    for _ in range(50):
        scale = (1.16 if female else 1.0) * rng.uniform(
            1.0 - VOCAL_TRACT_SPREAD, 1.0 + VOCAL_TRACT_SPREAD, (n_candidates, 1))
        cands = base_male * scale * rng.uniform(1.0 - FORMANT_SPREAD, 1.0 + FORMANT_SPREAD, (n_candidates, 3))
        if not taken:
            return cands[0]
        # Chebyshev distance to the nearest existing speaker
        dist = np.abs(cands[:, None, :] - np.array(taken)[None]).max(axis=2).min(axis=1)
        best = int(np.argmax(dist))
        if dist[best] >= MIN_FORMANT_GAP:
            return cands[best]
    raise ParameterError("could not separate speaker formants; too many speakers")


def _slow_noise(n, sr, rng, rate_hz=4.0):
    """Unit-variance random contour varying at roughly ``rate_hz``."""
    knots = rng.standard_normal(int(n / sr * rate_hz) + 3)
    contour = np.interp(np.arange(n) * rate_hz / sr, np.arange(knots.size), knots)
    return (contour - contour.mean()) / (contour.std() + 1e-12)


def _vowel_sos(formants, bandwidths, sr):
    """Cascade of unit-DC-gain two-pole resonators as second-order sections."""
    sos = []
    for f, bw in zip(formants, bandwidths):
        r = np.exp(-np.pi * bw / sr)
        a1, a2 = -2.0 * r * np.cos(2.0 * np.pi * f / sr), r * r
        sos.append([1.0 + a1 + a2, 0.0, 0.0, 1.0, a1, a2])
    return np.array(sos)


def _segments(sentence_id, n, rng):
    """Vowel segment boundaries, perturbed per repetition."""
    k = len(SENTENCE_VOWELS[sentence_id])
    weights = 1.0 + 0.15 * rng.uniform(-1, 1, k)
    return np.concatenate([[0.0], np.cumsum(weights) / weights.sum()]) * n


def _crossfade_weights(bounds, n):
    """(k, n) piecewise-linear weights peaking at each segment centre, summing to 1."""
    centers = (bounds[:-1] + bounds[1:]) / 2.0
    t = np.arange(n)
    eye = np.eye(centers.size)
    return np.stack([np.interp(t, centers, eye[i]) for i in range(centers.size)])


def synth_utterance(
    profile: SpeakerProfile,
    sentence_id: int,
    emotion: str,
    repetition: int,
    seed: int = 0,
    sample_rate: int = SAMPLE_RATE,
) -> AudioClip:
    """Render one utterance: jittered glottal pulses through the speaker's formants."""
    if sentence_id not in SENTENCE_VOWELS:
        raise ParameterError(f"sentence_id {sentence_id} outside 1..8")
    if emotion not in EMOTION_MODIFIERS:
        raise ParameterError(f"unknown emotion {emotion!r}")
    if not 1 <= repetition <= REPETITIONS:
        raise ParameterError("repetition must be in 1..9")
    mod = EMOTION_MODIFIERS[emotion]
    rng = _rng(seed, profile.speaker_id, sentence_id, emotion, repetition)
    sr = sample_rate

    duration = BASE_DURATION_S * (1.0 + 0.04 * len(SENTENCE_VOWELS[sentence_id]) - 0.2)
    duration = duration / mod.rate_scale * (1.0 + 0.05 * rng.uniform(-1, 1))
    n = int(round(np.clip(duration, 1.0, 2.0) * sr))

    # glottal source: slow f0 wander (std = emotion jitter) plus small cycle jitter
    f0 = profile.f0_base * mod.f0_scale
    wander = _slow_noise(n, sr, rng)
    source = np.zeros(n)
    pos = rng.uniform(0, sr / f0)
    while pos < n:
        source[int(pos)] += 1.0
        local = f0 * (1.0 + mod.jitter * wander[int(pos)])
        pos += sr / local * (1.0 + CYCLE_JITTER * rng.standard_normal())
    source += BREATH_NOISE * rng.standard_normal(n)  # aspiration, shaped by the same tilt
    source = lfilter([1.0 - profile.tilt], [1.0, -profile.tilt], source)

    # vowel filters cross-faded along the sentence
    bounds = _segments(sentence_id, n, rng)
    weights = _crossfade_weights(bounds, n)
    out = np.zeros(n)
    for w, v in zip(weights, SENTENCE_VOWELS[sentence_id]):
        formants = np.array(VOWELS[v]) * np.array(profile.formants)
        out += w * sosfilt(_vowel_sos(formants, profile.bandwidths, sr), source)
    out = np.diff(out, prepend=0.0)  # lip radiation

    # syllable-like amplitude envelope with short onsets/offsets
    t = np.arange(n)
    env = np.ones(n)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        inside = (t >= lo) & (t < hi)
        bump = np.cos(0.5 * np.pi * (t[inside] - mid) / half)
        env[inside] = 0.55 + 0.45 * np.sqrt(np.clip(bump, 0.0, None))
    ramp = int(0.02 * sr)
    env[:ramp] *= np.linspace(0, 1, ramp)
    env[-ramp:] *= np.linspace(1, 0, ramp)
    out *= env

    peak = np.max(np.abs(out))
    out = out / peak * 0.7 * profile.gain if peak > 0 else out
    return AudioClip(out, sr)


def utterance_filename(speaker_id: str, sentence_id: int, emotion: str, repetition: int) -> str:
    num = speaker_id[3:] if speaker_id.startswith("spk") else speaker_id
    return f"spk{num}_sent{sentence_id}_{emotion}_rep{repetition}.wav"


def corpus_plan(profiles: list[SpeakerProfile]) -> list[tuple[SpeakerProfile, int, str, int]]:
    """(profile, sentence, emotion, repetition) for every utterance, train first per speaker."""
    plan = []
    for p in profiles:
        for s in TRAIN_SENTENCES:
            for r in range(1, REPETITIONS + 1):
                plan.append((p, s, "neutral", r))
        for s in TEST_SENTENCES:
            for emo in EMOTIONS:
                for r in range(1, REPETITIONS + 1):
                    plan.append((p, s, emo, r))
    return plan


def build_corpus(n_speakers: int, out_dir, seed: int = 0, write_audio: bool = True) -> Path:
    """Write WAVs, ``manifest.csv`` and ``speakers.json`` under ``out_dir``.

    Returns the manifest path. ``write_audio=False`` writes only the
    manifest and profiles (useful for checking partition counts).
    """
    if n_speakers < 2:
        raise ParameterError("need at least two speakers")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profiles = make_profiles(n_speakers, seed)
    records = []
    for profile, sent, emo, rep in corpus_plan(profiles):
        path = out / utterance_filename(profile.speaker_id, sent, emo, rep)
        if write_audio:
            write_wav(synth_utterance(profile, sent, emo, rep, seed), path)
        records.append(UtteranceRecord(str(path), profile.speaker_id, sent, emo, rep))
    (out / "speakers.json").write_text(
        json.dumps({"seed": seed, "sample_rate": SAMPLE_RATE,
                    "speakers": [asdict(p) for p in profiles]}, indent=2) + "\n",
        encoding="utf-8",
    )
    return write_manifest(records, out / "manifest.csv")
