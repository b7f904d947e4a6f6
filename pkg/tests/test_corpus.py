import json

import numpy as np
import pytest

from markbench.corpus import (
    ManifestError,
    generate_synthetic_corpus,
    load_manifest,
    synthetic_clip,
)


def test_generator_shape_and_determinism(tmp_path):
    m1 = generate_synthetic_corpus(tmp_path / "a", n_clips=4, duration_s=1.5, sample_rate=16000, seed=5)
    m2 = generate_synthetic_corpus(tmp_path / "b", n_clips=4, duration_s=1.5, sample_rate=16000, seed=5)
    assert len(m1) == 4
    for e1, e2 in zip(m1.entries, m2.entries):
        c1 = m1.load_clip(e1)
        c2 = m2.load_clip(e2)
        assert len(c1) == round(1.5 * 16000)
        assert np.array_equal(c1.samples, c2.samples)  # bit-identical per seed


def test_generator_length_arithmetic(tmp_path):
    m = generate_synthetic_corpus(tmp_path / "c", n_clips=1, duration_s=5.0, sample_rate=44100, seed=1)
    clip = m.load_clip(m.entries[0])
    assert len(clip) == 220500


def test_speech_band_energy_concentration():
    for i in range(6):
        clip = synthetic_clip(9, i, duration_s=2.0, sample_rate=44100)
        spec = np.abs(np.fft.rfft(clip.samples)) ** 2
        freqs = np.fft.rfftfreq(len(clip), 1 / 44100)
        in_band = spec[(freqs >= 80) & (freqs <= 4000)].sum()
        assert in_band / spec.sum() >= 0.9


def test_speaker_structure(tmp_path):
    m = generate_synthetic_corpus(tmp_path / "d", n_clips=22, duration_s=1.0, sample_rate=16000, seed=2)
    speakers = [e.speaker_id for e in m.entries]
    assert speakers[0] == speakers[20] == "spk00"
    assert len(set(speakers)) == 20


def test_load_manifest_round_trip(tmp_path):
    m = generate_synthetic_corpus(tmp_path / "e", n_clips=3, duration_s=1.0, sample_rate=16000, seed=3)
    loaded = load_manifest(m.manifest_path())
    assert loaded.clip_ids() == m.clip_ids()


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError, match="not found"):
        load_manifest(tmp_path / "missing.jsonl")

    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n")
    with pytest.raises(ManifestError, match="empty"):
        load_manifest(empty)

    dup = tmp_path / "dup.jsonl"
    wav = tmp_path / "x.wav"
    from markbench.audio import AudioBuffer
    from markbench.wavio import write_wav

    write_wav(AudioBuffer(np.zeros(100), 8000), wav)
    rec = json.dumps({"clip_id": "a", "wav_path": "x.wav"})
    dup.write_text(rec + "\n" + rec + "\n")
    with pytest.raises(ManifestError, match="duplicate clip_id 'a'"):
        load_manifest(dup)

    missing_file = tmp_path / "mf.jsonl"
    missing_file.write_text(json.dumps({"clip_id": "b", "wav_path": "nope.wav"}) + "\n")
    with pytest.raises(ManifestError, match="not readable"):
        load_manifest(missing_file)

    bad_json = tmp_path / "bad.jsonl"
    bad_json.write_text("{not json}\n")
    with pytest.raises(ManifestError, match="not valid JSON"):
        load_manifest(bad_json)


def test_manifest_transcripts_preserved(tmp_path):
    from markbench.audio import AudioBuffer
    from markbench.wavio import write_wav

    wav = tmp_path / "y.wav"
    write_wav(AudioBuffer(np.zeros(100), 8000), wav)
    path = tmp_path / "t.jsonl"
    path.write_text(
        json.dumps({"clip_id": "y", "wav_path": "y.wav", "transcript": "hello there"}) + "\n"
    )
    m = load_manifest(path)
    assert m.entries[0].transcript == "hello there"
