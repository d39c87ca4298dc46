import numpy as np
import pytest

from disguised_sid.audio_io import AudioClip


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tone(freq, seconds=1.0, sr=16000, amp=0.5):
    t = np.arange(int(round(seconds * sr))) / sr
    return AudioClip(amp * np.sin(2 * np.pi * freq * t), sr)


def pulse_train(freq, seconds=1.0, sr=16000):
    # band-limited, so the period need not be a whole number of samples
    t = np.arange(int(round(seconds * sr))) / sr
    k = np.arange(1, int((sr / 2) // freq) + 1)[:, None]
    x = np.cos(2 * np.pi * k * freq * t).sum(axis=0)
    return AudioClip(0.8 * x / np.abs(x).max(), sr)


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """3 speakers, neutral and anger only, repetitions 1-3: 36 train / 72 test clips."""
    from disguised_sid.audio_io import UtteranceRecord, write_manifest, write_wav
    from disguised_sid.corpus import corpus_plan, make_profiles, synth_utterance, utterance_filename

    out = tmp_path_factory.mktemp("tiny")
    records = []
    for profile, sent, emo, rep in corpus_plan(make_profiles(3, seed=4)):
        if emo not in ("neutral", "anger") or rep > 3:
            continue
        path = out / utterance_filename(profile.speaker_id, sent, emo, rep)
        write_wav(synth_utterance(profile, sent, emo, rep, seed=4), path)
        records.append(UtteranceRecord(str(path), profile.speaker_id, sent, emo, rep))
    return write_manifest(records, out / "manifest.csv")


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"CRITERION {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
