"""Built-in reference watermark: spread-spectrum modulation of the spectrogram.

Embedding perturbs log-magnitude STFT bins inside a speech band with a
key-derived +/-1 chip pattern and reconstructs the waveform from the modified
magnitudes and the original phases. Chips span several frames and bins so the
signature survives overlap-add resynthesis, and the perturbation depth is
allocated inversely to each bin's energy (equal additive energy per bin),
which concentrates detection evidence where the carrier is quiet while the
overall perturbation stays at the configured watermark-to-signal ratio.

Detection whitens the log-magnitude spectrogram by removing each bin's
temporal mean, folds frames over the pattern period, and reports the best
normalized correlation against the pattern over all frame offsets, making the
score tolerant to hop-aligned time shifts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .audio import DEFAULT_STFT, AudioBuffer, StftParams, istft, stft
from .errors import MarkbenchError, ParameterError
from .rng import make_rng

__all__ = [
    "WatermarkKey",
    "SpreadSpectrumWatermark",
    "WatermarkLengthError",
    "embed",
    "detect",
    "PATTERN_PERIOD_FRAMES",
]

PATTERN_PERIOD_FRAMES = 32
_TIME_CHIP = 4   # frames per chip; >= fft/hop overlap factor so chips survive OLA
_FREQ_CHIP = 4   # bins per chip; wider than the analysis window's mainlobe smear
_FLOOR_DB = -60.0  # magnitude floor relative to the loudest in-band bin
_MAX_LOG_DEPTH = 0.6   # cap on per-bin log-magnitude perturbation (nepers)
_MAX_SHAPE_GAIN = 6.0  # cap on the quiet-bin allocation boost


class WatermarkLengthError(MarkbenchError):
    """Input shorter than the minimum the watermark can carry."""


@dataclass(frozen=True)
class WatermarkKey:
    """Secret configuration: pattern seed, embedding band, and strength.

    `strength_db` is the watermark-to-signal ratio; -30 means the embedded
    perturbation sits 30 dB below the signal.
    """

    key: int
    band_lo_hz: float = 300.0
    band_hi_hz: float = 3400.0
    strength_db: float = -30.0
    native_rate: int = 16000

    def __post_init__(self):
        if not 0 < self.band_lo_hz < self.band_hi_hz <= self.native_rate / 2:
            raise ParameterError(
                f"band [{self.band_lo_hz}, {self.band_hi_hz}] Hz must sit inside "
                f"(0, {self.native_rate / 2}] Hz"
            )
        if self.strength_db >= 0:
            raise ParameterError("strength_db must be negative (low-magnitude perturbation)")

    def to_dict(self) -> dict:
        return {
            "key": int(self.key),
            "band_lo_hz": self.band_lo_hz,
            "band_hi_hz": self.band_hi_hz,
            "strength_db": self.strength_db,
            "native_rate": self.native_rate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "WatermarkKey":
        return cls(
            key=int(d["key"]),
            band_lo_hz=float(d.get("band_lo_hz", 300.0)),
            band_hi_hz=float(d.get("band_hi_hz", 3400.0)),
            strength_db=float(d.get("strength_db", -30.0)),
            native_rate=int(d.get("native_rate", 16000)),
        )

    @classmethod
    def from_json(cls, text: str) -> "WatermarkKey":
        return cls.from_dict(json.loads(text))


def _band_bins(key: WatermarkKey, params: StftParams) -> np.ndarray:
    freqs = np.arange(params.n_bins) * (key.native_rate / params.fft_size)
    bins = np.flatnonzero((freqs >= key.band_lo_hz) & (freqs <= key.band_hi_hz))
    if bins.size == 0:
        raise ParameterError("embedding band contains no STFT bins")
    return bins


def _pattern(key: WatermarkKey, n_bins: int) -> np.ndarray:
    """+/-1 chip pattern of shape (n_bins, period); chip signs alternate per
    time chip to push the pattern's modulation energy above speech's slow
    envelope and vibrato rates."""
    rng = make_rng(key.key, "ss-pattern")
    n_tchips = PATTERN_PERIOD_FRAMES // _TIME_CHIP
    n_fchips = math.ceil(n_bins / _FREQ_CHIP)
    core = rng.integers(0, 2, size=(n_fchips, n_tchips)).astype(np.float64) * 2.0 - 1.0
    core *= (-1.0) ** np.arange(n_tchips)[None, :]
    full = np.repeat(np.repeat(core, _FREQ_CHIP, axis=0)[:n_bins], _TIME_CHIP, axis=1)
    return full


def _check_input(buffer: AudioBuffer, key: WatermarkKey):
    if buffer.sample_rate != key.native_rate:
        raise ParameterError(
            f"buffer rate {buffer.sample_rate} != watermark native rate {key.native_rate}; "
            "wrap with band-splitting to handle other rates"
        )
    if len(buffer) < key.native_rate:
        raise WatermarkLengthError(
            f"need at least 1 s of audio ({key.native_rate} samples), got {len(buffer)}"
        )


def embed(buffer: AudioBuffer, key: WatermarkKey, params: StftParams = DEFAULT_STFT) -> AudioBuffer:
    """Embed the key's signature; the output-vs-input SNR equals -strength_db
    exactly (the additive perturbation is rescaled in the waveform domain)."""
    _check_input(buffer, key)
    spec = stft(buffer, params)
    mag = np.abs(spec.frames)
    phase = np.exp(1j * np.angle(spec.frames))

    bins = _band_bins(key, params)
    pat = _pattern(key, bins.size)
    tiled = pat[:, np.arange(spec.n_frames) % PATTERN_PERIOD_FRAMES]

    target_snr_db = -key.strength_db
    e_total = float(np.sum(mag**2))
    e_band_bins = np.mean(mag[bins, :] ** 2, axis=1)
    e_band = float(np.sum(mag[bins, :] ** 2))
    if e_band == 0.0:
        raise ParameterError("cannot embed into silence")

    # equal-additive-energy allocation: log depth ~ 1/sqrt(bin energy), capped
    shape = np.sqrt(np.mean(e_band_bins) / (e_band_bins + 1e-30))
    shape = np.minimum(shape / np.mean(shape), _MAX_SHAPE_GAIN)
    delta0 = 10.0 ** (-target_snr_db / 20.0) * math.sqrt(e_total / e_band)
    depth = np.minimum(delta0 * shape, _MAX_LOG_DEPTH)[:, None]

    mag_marked = mag.copy()
    mag_marked[bins, :] = mag[bins, :] * np.exp(depth * tiled)
    marked = istft(replace(spec, frames=mag_marked * phase))

    w = marked.samples - buffer.samples
    e_w = float(np.dot(w, w))
    if e_w == 0.0:
        return buffer
    g = 10.0 ** (-target_snr_db / 20.0) * math.sqrt(
        float(np.dot(buffer.samples, buffer.samples)) / e_w
    )
    return AudioBuffer(buffer.samples + g * w, buffer.sample_rate)


def detect(buffer: AudioBuffer, key: WatermarkKey, params: StftParams = DEFAULT_STFT) -> float:
    """Normalized correlation score in [-1, 1]; higher means more evidence.

    Folding averages the whitened residual over the pattern period before
    correlating, so the (smooth) speech residual integrates down while the
    periodic signature does not.
    """
    _check_input(buffer, key)
    spec = stft(buffer, params)
    bins = _band_bins(key, params)
    mag = np.abs(spec.frames[bins, :])
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    logmag = np.log(np.maximum(mag, peak * 10.0 ** (_FLOOR_DB / 20.0)))
    resid = logmag - logmag.mean(axis=1, keepdims=True)

    frame_phase = np.arange(spec.n_frames) % PATTERN_PERIOD_FRAMES
    folded = np.zeros((bins.size, PATTERN_PERIOD_FRAMES))
    for tau in range(PATTERN_PERIOD_FRAMES):
        cols = resid[:, frame_phase == tau]
        if cols.shape[1]:
            folded[:, tau] = cols.mean(axis=1)

    pat = _pattern(key, bins.size)
    norm_r = float(np.sqrt(np.sum(folded**2)))
    norm_p = float(np.sqrt(np.sum(pat**2)))
    if norm_r == 0.0:
        return 0.0
    best = -1.0
    for offset in range(PATTERN_PERIOD_FRAMES):
        shifted = np.roll(pat, offset, axis=1)
        best = max(best, float(np.sum(folded * shifted)) / (norm_r * norm_p))
    return best


class SpreadSpectrumWatermark:
    """Embedder/detector handle around one key (duck-typed like plugin handles)."""

    def __init__(self, key: WatermarkKey, params: StftParams = DEFAULT_STFT):
        self.key = key
        self.params = params

    @property
    def native_rate(self) -> int:
        return self.key.native_rate

    @property
    def watermark_id(self) -> str:
        return f"ss:{self.key.key}"

    def embed(self, buffer: AudioBuffer) -> AudioBuffer:
        return embed(buffer, self.key, self.params)

    def detect(self, buffer: AudioBuffer) -> float:
        return detect(buffer, self.key, self.params)
