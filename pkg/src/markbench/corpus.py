"""Corpus manifests and a synthetic speech-like clip generator.

The generator produces voiced, formant-shaped clips from 20 synthetic
"speakers" (10 low-pitched, 10 high-pitched), deterministic per seed, so the
whole pipeline can run without shipping audio data. Real recordings attach
through the same manifest format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import sosfilt

from .audio import AudioBuffer
from .errors import MarkbenchError
from .rng import make_rng
from .wavio import read_wav, write_wav

__all__ = [
    "ManifestEntry",
    "CorpusManifest",
    "load_manifest",
    "generate_synthetic_corpus",
    "synthetic_clip",
    "N_SPEAKERS",
]

N_SPEAKERS = 20
MANIFEST_NAME = "manifest.jsonl"


class ManifestError(MarkbenchError):
    """Manifest file missing, empty, or inconsistent."""


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    wav_path: str
    transcript: str | None = None
    speaker_id: str | None = None


@dataclass(frozen=True)
class CorpusManifest:
    root: Path
    entries: tuple
    source: Path | None = None

    def __len__(self):
        return len(self.entries)

    def clip_ids(self):
        return [e.clip_id for e in self.entries]

    def load_clip(self, entry: ManifestEntry) -> AudioBuffer:
        return read_wav(self.root / entry.wav_path)

    def manifest_path(self) -> Path:
        return self.source if self.source is not None else self.root / MANIFEST_NAME


def load_manifest(path) -> CorpusManifest:
    """Read a JSON-lines manifest; one {"clip_id", "wav_path", ...} per line."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    root = path.parent
    entries = []
    seen = set()
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        try:
            entry = ManifestEntry(
                clip_id=record["clip_id"],
                wav_path=record["wav_path"],
                transcript=record.get("transcript"),
                speaker_id=record.get("speaker_id"),
            )
        except KeyError as exc:
            raise ManifestError(f"{path}:{lineno}: missing field {exc}") from exc
        if entry.clip_id in seen:
            raise ManifestError(f"duplicate clip_id {entry.clip_id!r}")
        seen.add(entry.clip_id)
        if not (root / entry.wav_path).is_file():
            raise ManifestError(f"clip {entry.clip_id!r}: file not readable: {root / entry.wav_path}")
        entries.append(entry)
    if not entries:
        raise ManifestError(f"manifest is empty: {path}")
    return CorpusManifest(root=root, entries=tuple(entries), source=path)


def _resonator_sos(center_hz: float, bandwidth_hz: float, rate: int) -> np.ndarray:
    """Two-pole resonance; unity-ish peak gain via the (1 - r) numerator."""
    r = np.exp(-np.pi * bandwidth_hz / rate)
    theta = 2.0 * np.pi * center_hz / rate
    return np.array([1.0 - r, 0.0, 0.0, 1.0, -2.0 * r * np.cos(theta), r * r])


def _speaker_profile(corpus_seed: int, speaker: int) -> dict:
    rng = make_rng(corpus_seed, "speaker", speaker)
    low_voice = speaker < N_SPEAKERS // 2
    f0 = rng.uniform(85.0, 150.0) if low_voice else rng.uniform(165.0, 255.0)
    formants = [
        (rng.uniform(320.0, 850.0), rng.uniform(60.0, 110.0)),
        (rng.uniform(950.0, 2300.0), rng.uniform(90.0, 160.0)),
        (rng.uniform(2400.0, 3300.0), rng.uniform(130.0, 260.0)),
    ]
    return {"f0": f0, "formants": formants}


def synthetic_clip(
    seed: int, clip_index: int, duration_s: float = 5.0, sample_rate: int = 44100
) -> AudioBuffer:
    """One voiced clip: vibrato'd harmonic source through formant resonators
    plus low-level aspiration noise, amplitude-modulated at syllable rate."""
    profile = _speaker_profile(seed, clip_index % N_SPEAKERS)
    rng = make_rng(seed, "clip", clip_index)
    n = round(duration_s * sample_rate)
    t = np.arange(n) / sample_rate

    f0 = profile["f0"] * rng.uniform(0.95, 1.05)
    vib_rate = rng.uniform(4.0, 6.5)
    vib_depth = rng.uniform(0.01, 0.03)
    inst_f0 = f0 * (1.0 + vib_depth * np.sin(2.0 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi)))
    phase = 2.0 * np.pi * np.cumsum(inst_f0) / sample_rate

    max_harmonic_hz = min(3800.0, 0.45 * sample_rate)
    n_harm = max(1, int(max_harmonic_hz / (f0 * (1.0 + vib_depth))))
    source = np.zeros(n)
    for h in range(1, n_harm + 1):
        amp = h ** -0.8 * rng.uniform(0.7, 1.3)
        source += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))

    sos = np.vstack([_resonator_sos(f, bw, sample_rate) for f, bw in profile["formants"]])
    voiced = sosfilt(sos, source)

    aspiration = sosfilt(sos, rng.standard_normal(n))
    asp_gain = 10.0 ** (-28.0 / 20.0) * np.sqrt(np.mean(voiced**2) / max(np.mean(aspiration**2), 1e-30))
    x = voiced + asp_gain * aspiration

    syllable_rate = rng.uniform(1.5, 3.5)
    env = 0.45 + 0.55 * (0.5 + 0.5 * np.sin(2.0 * np.pi * syllable_rate * t + rng.uniform(0, 2 * np.pi)))
    env *= 0.8 + 0.2 * np.sin(2.0 * np.pi * rng.uniform(0.2, 0.6) * t + rng.uniform(0, 2 * np.pi))
    fade = min(n // 2, round(0.05 * sample_rate))
    if fade:
        ramp = np.sin(np.linspace(0.0, np.pi / 2.0, fade)) ** 2
        env[:fade] *= ramp
        env[-fade:] *= ramp[::-1]
    x *= env

    return AudioBuffer(0.5 * x / np.max(np.abs(x)), sample_rate)


def generate_synthetic_corpus(
    out_dir,
    n_clips: int = 200,
    duration_s: float = 5.0,
    sample_rate: int = 44100,
    seed: int = 0,
) -> CorpusManifest:
    """Write n_clips WAVs plus a manifest into out_dir; bit-reproducible per seed."""
    if n_clips < 1:
        raise MarkbenchError("n_clips must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    lines = []
    for i in range(n_clips):
        clip_id = f"clip_{i:04d}"
        wav_name = f"{clip_id}.wav"
        clip = synthetic_clip(seed, i, duration_s=duration_s, sample_rate=sample_rate)
        write_wav(clip, out_dir / wav_name, encoding="float32")
        entry = ManifestEntry(
            clip_id=clip_id, wav_path=wav_name, speaker_id=f"spk{i % N_SPEAKERS:02d}"
        )
        entries.append(entry)
        lines.append(
            json.dumps(
                {"clip_id": clip_id, "wav_path": wav_name, "speaker_id": entry.speaker_id},
                sort_keys=True,
            )
        )
    (out_dir / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    return CorpusManifest(root=out_dir, entries=tuple(entries), source=out_dir / MANIFEST_NAME)
