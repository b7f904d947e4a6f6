"""Band-splitting wrapper: run a fixed-rate watermark inside higher-rate audio.

The input is split at the watermark's native Nyquist into complementary bands
by a linear-phase FIR pair (highpass = delayed impulse minus lowpass, so the
bands sum back to the input exactly). The low band is resampled down,
watermarked, resampled back, RMS-normalized against the native-rate result,
and summed with the untouched high band. Detection simply resamples to the
native rate, discarding unwatermarked high-frequency content.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .audio import AudioBuffer, resample
from .errors import MarkbenchError, ParameterError

__all__ = [
    "BandedEmbedder",
    "BandedWatermark",
    "split_bands",
    "embed_banded",
    "detect_banded",
    "CROSSOVER_TAPS",
]

CROSSOVER_TAPS = 255
_CROSSOVER_BETA = 7.857  # Kaiser beta for ~80 dB stopband


@lru_cache(maxsize=16)
def _lowpass_taps(cutoff_hz: float, rate: int) -> np.ndarray:
    f = cutoff_hz / rate
    m = np.arange(CROSSOVER_TAPS) - (CROSSOVER_TAPS - 1) / 2.0
    h = 2.0 * f * np.sinc(2.0 * f * m) * np.kaiser(CROSSOVER_TAPS, _CROSSOVER_BETA)
    h /= h.sum()
    h.setflags(write=False)
    return h


def split_bands(buffer: AudioBuffer, crossover_hz: float) -> tuple[AudioBuffer, AudioBuffer]:
    """Split into (low, high) bands that sum to the input sample-exactly."""
    nyquist = buffer.sample_rate / 2.0
    if not 0.0 < crossover_hz < nyquist:
        raise ParameterError(f"crossover {crossover_hz} Hz outside (0, {nyquist}) Hz")
    h = _lowpass_taps(crossover_hz, buffer.sample_rate)
    delay = (CROSSOVER_TAPS - 1) // 2
    n = len(buffer)
    lo = np.convolve(buffer.samples, h)[delay : delay + n]
    hi = buffer.samples - lo  # complementary by construction
    return AudioBuffer(lo, buffer.sample_rate), AudioBuffer(hi, buffer.sample_rate)


@dataclass(frozen=True)
class BandedEmbedder:
    """An embedder handle plus the native rate its watermark operates at."""

    inner: object
    native_rate: int

    def __post_init__(self):
        if self.native_rate <= 0:
            raise ParameterError("native_rate must be positive")


def embed_banded(e: BandedEmbedder, buffer: AudioBuffer) -> AudioBuffer:
    """Watermark the low band of `buffer`; bypasses splitting at matching rates."""
    if buffer.sample_rate == e.native_rate:
        return e.inner.embed(buffer)
    if buffer.sample_rate < e.native_rate:
        raise ParameterError(
            f"buffer rate {buffer.sample_rate} below the watermark's native rate {e.native_rate}"
        )
    lo, hi = split_bands(buffer, e.native_rate / 2.0)
    lo_native = resample(lo, e.native_rate)
    try:
        marked = e.inner.embed(lo_native)
    except MarkbenchError as exc:
        raise type(exc)(f"inner embedder failed on the low band: {exc}") from exc
    if marked.sample_rate != e.native_rate or len(marked) != len(lo_native):
        raise MarkbenchError("inner embedder changed the low band's rate or length")
    marked_up = resample(marked, buffer.sample_rate)
    up = _fit(marked_up.samples, len(buffer))
    # normalize for resampling gain: match the native-rate band's RMS
    rms_native = float(np.sqrt(np.mean(marked.samples**2)))
    rms_up = float(np.sqrt(np.mean(up**2)))
    if rms_native > 0.0 and rms_up > 0.0:
        up *= rms_native / rms_up
    return AudioBuffer(up + hi.samples, buffer.sample_rate)


def detect_banded(detector, native_rate: int, buffer: AudioBuffer) -> float:
    """Resample to the native rate (dropping high-band content) and detect."""
    if buffer.sample_rate == native_rate:
        return detector.detect(buffer)
    if buffer.sample_rate < native_rate:
        raise ParameterError(
            f"buffer rate {buffer.sample_rate} below the watermark's native rate {native_rate}"
        )
    return detector.detect(resample(buffer, native_rate))


def _fit(x: np.ndarray, n: int) -> np.ndarray:
    if x.size == n:
        return x.copy()
    if x.size > n:
        return x[:n].copy()
    return np.concatenate([x, np.zeros(n - x.size)])


class BandedWatermark:
    """Any-rate embed/detect facade over a fixed-rate watermark handle."""

    def __init__(self, inner, native_rate: int | None = None):
        self.inner = inner
        self.native_rate = int(native_rate if native_rate is not None else inner.native_rate)
        self._banded = BandedEmbedder(inner=inner, native_rate=self.native_rate)

    @property
    def watermark_id(self) -> str:
        inner_id = getattr(self.inner, "watermark_id", type(self.inner).__name__)
        return f"banded({inner_id})@{self.native_rate}"

    def embed(self, buffer: AudioBuffer) -> AudioBuffer:
        return embed_banded(self._banded, buffer)

    def detect(self, buffer: AudioBuffer) -> float:
        return detect_banded(self.inner, self.native_rate, buffer)
