import struct
import wave

import numpy as np
import pytest

from disguised_sid.audio_io import (
    AudioClip,
    UtteranceRecord,
    load_manifest,
    read_wav,
    split_partitions,
    write_manifest,
    write_wav,
)
from disguised_sid.exceptions import (
    AudioFormatError,
    EmptyAudioError,
    ManifestError,
    UnsupportedAudioError,
)


def _write_pcm(path, frames, channels=1, rate=16000):
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(np.asarray(frames, dtype="<i2").tobytes())


def test_read_header_echo(tmp_path):
    p = tmp_path / "a.wav"
    _write_pcm(p, np.zeros(16000, dtype=int))
    clip = read_wav(p)
    assert len(clip) == 16000
    assert clip.sample_rate == 16000


def test_min_sample_is_minus_one(tmp_path):
    p = tmp_path / "a.wav"
    _write_pcm(p, [-32768, 0, 32767])
    clip = read_wav(p)
    assert clip.samples[0] == -1.0
    assert clip.samples[2] == 32767 / 32768


def test_stereo_is_averaged(tmp_path):
    p = tmp_path / "s.wav"
    _write_pcm(p, [16384, -16384] * 10, channels=2)
    clip = read_wav(p)
    assert len(clip) == 10
    np.testing.assert_array_equal(clip.samples, 0.0)


def test_zeros_round_trip(tmp_path):
    p = tmp_path / "z.wav"
    write_wav(AudioClip(np.zeros(100), 8000), p)
    clip = read_wav(p)
    assert clip.sample_rate == 8000
    np.testing.assert_array_equal(clip.samples, 0.0)


def test_write_clamps_overrange(tmp_path):
    p = tmp_path / "c.wav"
    write_wav(AudioClip(np.array([2.0, -3.0, 1.0]), 16000), p)
    clip = read_wav(p)
    assert clip.samples[0] == 32767 / 32768
    assert clip.samples[1] == -1.0
    assert clip.samples[2] == 32767 / 32768


def test_round_trip_within_one_step(tmp_path, rng):
    x = rng.uniform(-1, 1, 5000)
    p = tmp_path / "r.wav"
    write_wav(AudioClip(x, 16000), p)
    err = np.max(np.abs(read_wav(p).samples - x))
    assert err <= 1 / 32768


def test_not_riff(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"hello world, definitely not audio")
    with pytest.raises(AudioFormatError):
        read_wav(p)


def _raw_wav(fmt_tag=1, bits=16, channels=1, data=b"\x00\x00" * 4):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, 16000, 16000 * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.mark.parametrize("kwargs", [{"fmt_tag": 3, "bits": 32}, {"bits": 24, "data": b"\x00" * 6}])
def test_unsupported_encodings(tmp_path, kwargs):
    p = tmp_path / "u.wav"
    p.write_bytes(_raw_wav(**kwargs))
    with pytest.raises(UnsupportedAudioError):
        read_wav(p)


def test_empty_data_chunk(tmp_path):
    p = tmp_path / "e.wav"
    p.write_bytes(_raw_wav(data=b""))
    with pytest.raises(EmptyAudioError):
        read_wav(p)


def test_truncated_header(tmp_path):
    p = tmp_path / "t.wav"
    p.write_bytes(_raw_wav()[:30])
    with pytest.raises(AudioFormatError):
        read_wav(p)


def test_clip_rejects_nonfinite():
    with pytest.raises(ValueError):
        AudioClip(np.array([0.0, np.nan]), 16000)


HEADER = "path,speaker_id,sentence_id,emotion,repetition\n"


def test_manifest_single_line(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text(HEADER + "a.wav,spk01,3,anger,7\n")
    recs = load_manifest(m)
    assert len(recs) == 1
    r = recs[0]
    assert (r.speaker_id, r.sentence_id, r.emotion, r.repetition) == ("spk01", 3, "anger", 7)
    assert r.path == str(tmp_path / "a.wav")


def test_manifest_bad_sentence_names_line(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text(HEADER + "a.wav,spk01,3,anger,7\nb.wav,spk01,9,anger,1\n")
    with pytest.raises(ManifestError, match="line 3"):
        load_manifest(m)


@pytest.mark.parametrize("line", ["a.wav,spk01,1,bored,1", "a.wav,spk01,1,sad,10", "a.wav,spk01,x,sad,1"])
def test_manifest_invalid_tokens(tmp_path, line):
    m = tmp_path / "m.csv"
    m.write_text(HEADER + line + "\n")
    with pytest.raises(ManifestError, match="line 2"):
        load_manifest(m)


def test_manifest_header_required(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("a.wav,spk01,1,sad,1\n")
    with pytest.raises(ManifestError):
        load_manifest(m)


def test_manifest_round_trip_preserves_order(tmp_path):
    recs = [UtteranceRecord(str(tmp_path / f"{i}.wav"), f"spk{i % 3}", 1 + i % 8, "neutral", 1 + i % 9)
            for i in range(20)]
    path = write_manifest(recs, tmp_path / "m.csv")
    assert load_manifest(path) == recs


def test_split_partitions():
    recs = [
        UtteranceRecord("a", "s", 1, "neutral", 1),
        UtteranceRecord("b", "s", 2, "anger", 1),
        UtteranceRecord("c", "s", 5, "neutral", 1),
        UtteranceRecord("d", "s", 8, "fear", 9),
    ]
    train, test = split_partitions(recs)
    assert [r.path for r in train] == ["a"]
    assert [r.path for r in test] == ["c", "d"]
