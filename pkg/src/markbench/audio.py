"""Mono audio buffers, band-limited resampling, STFT analysis, and SNR.

Everything downstream of this module trades in :class:`AudioBuffer` values:
immutable mono sample arrays tagged with a sample rate. All operations are
pure functions returning new buffers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.signal import get_window, upfirdn

from .errors import ParameterError, UndefinedSnrError

__all__ = [
    "AudioBuffer",
    "StftParams",
    "Spectrogram",
    "DEFAULT_STFT",
    "stft",
    "istft",
    "resample",
    "measure_snr",
]


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """A finite mono signal: float64 samples (nominal range [-1, 1]) plus rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ParameterError(f"AudioBuffer requires a 1-D sample array, got shape {arr.shape}")
        if not (isinstance(self.sample_rate, (int, np.integer)) and self.sample_rate > 0):
            raise ParameterError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        if arr.size and not np.isfinite(arr).all():
            raise ParameterError("AudioBuffer samples must be finite (no NaN/Inf)")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters; constrained so overlap-add reconstruction is exact.

    `hop_size` must divide `fft_size` with at least 50% overlap, which keeps
    the squared-window overlap sum strictly positive everywhere.
    """

    fft_size: int = 1024
    hop_size: int = 256
    window: str = "hann"

    def __post_init__(self):
        if self.fft_size <= 0 or self.hop_size <= 0:
            raise ParameterError("fft_size and hop_size must be positive")
        if self.window != "hann":
            raise ParameterError(f"unsupported window {self.window!r}")
        if self.hop_size * 2 > self.fft_size or self.fft_size % self.hop_size != 0:
            raise ParameterError(
                f"(fft={self.fft_size}, hop={self.hop_size}) violates the overlap-add "
                "constraint: hop must divide fft_size with >= 50% overlap"
            )

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


DEFAULT_STFT = StftParams(fft_size=1024, hop_size=256)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT frames, shape (n_bins, n_frames), plus provenance."""

    frames: np.ndarray
    params: StftParams
    source_rate: int
    source_length: int

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[0] != self.params.n_bins:
            raise ParameterError(
                f"expected {self.params.n_bins} frequency bins, got frames of shape {self.frames.shape}"
            )

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.params.n_bins) * (self.source_rate / self.params.fft_size)


@lru_cache(maxsize=32)
def _analysis_window(fft_size: int) -> np.ndarray:
    w = get_window("hann", fft_size, fftbins=True)
    w.setflags(write=False)
    return w


def stft(buffer: AudioBuffer, params: StftParams = DEFAULT_STFT) -> Spectrogram:
    """Short-time Fourier transform with one fft_size of zero padding per edge.

    The padding guarantees every input sample is covered by a full set of
    overlapping windows, so `istft` reconstructs all of them, not just the
    interior.
    """
    n = len(buffer)
    fft, hop = params.fft_size, params.hop_size
    x = np.concatenate([np.zeros(fft), buffer.samples, np.zeros(fft)])
    n_frames = (x.size - fft) // hop + 1
    idx = hop * np.arange(n_frames)[:, None] + np.arange(fft)[None, :]
    frames = x[idx] * _analysis_window(fft)
    return Spectrogram(
        frames=np.fft.rfft(frames, axis=1).T.copy(),
        params=params,
        source_rate=buffer.sample_rate,
        source_length=n,
    )


def istft(spec: Spectrogram) -> AudioBuffer:
    """Weighted overlap-add inverse; restores the source length exactly."""
    fft, hop = spec.params.fft_size, spec.params.hop_size
    win = _analysis_window(fft)
    frames = np.fft.irfft(spec.frames.T, n=fft, axis=1) * win
    out_len = hop * (spec.n_frames - 1) + fft
    acc = np.zeros(out_len)
    norm = np.zeros(out_len)
    wsq = win * win
    for i in range(spec.n_frames):
        sl = slice(i * hop, i * hop + fft)
        acc[sl] += frames[i]
        norm[sl] += wsq
    acc /= np.maximum(norm, 1e-12)
    start = fft
    return AudioBuffer(acc[start : start + spec.source_length], spec.source_rate)


# Resampler: polyphase windowed-sinc (Kaiser), zero phase delay, unity gain.
# 96 zero-crossing half-width with beta for a >= 60 dB stopband keeps the
# passband flat through 0.9x the smaller Nyquist and the stopband at it.
_SINC_CROSSINGS = 96
_KAISER_BETA = 5.653
_CUTOFF_RATIO = 0.4725  # of min(source, target) rate


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited resampling; identity when the rates already match.

    Output length is round(len * target/source); content above the smaller
    Nyquist is attenuated by at least 60 dB when downsampling.
    """
    if target_rate <= 0:
        raise ParameterError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buffer.sample_rate:
        return buffer
    n = len(buffer)
    ratio = Fraction(int(target_rate), buffer.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    n_out = int(Fraction(n) * ratio + Fraction(1, 2))
    if n == 0 or n_out == 0:
        return AudioBuffer(np.zeros(n_out), int(target_rate))
    y = _apply_rational(buffer.samples, up, down, n_out)
    return AudioBuffer(y, int(target_rate))


def resample_by_factor(buffer: AudioBuffer, factor: float) -> np.ndarray:
    """Resample samples onto a grid `factor` times denser (factor < 1 shrinks).

    Rate bookkeeping is left to the caller; used for speed/pitch changes where
    the nominal rate must stay put. Output length is round(len * factor).
    """
    if factor <= 0:
        raise ParameterError(f"resampling factor must be positive, got {factor}")
    n = len(buffer)
    n_out = int(round(n * factor))
    if factor == 1.0:
        return buffer.samples.copy()
    ratio = Fraction(factor).limit_denominator(10000)
    if n == 0 or n_out == 0:
        return np.zeros(n_out)
    return _apply_rational(buffer.samples, ratio.numerator, ratio.denominator, n_out)


@lru_cache(maxsize=64)
def _rational_filter(up: int, down: int) -> tuple[np.ndarray, int]:
    f_cut = _CUTOFF_RATIO * min(1.0 / up, 1.0 / down)
    half = int(math.ceil(_SINC_CROSSINGS / (2.0 * f_cut)))
    m = np.arange(-half, half + 1, dtype=np.float64)
    taps = 2.0 * f_cut * np.sinc(2.0 * f_cut * m) * np.kaiser(2 * half + 1, _KAISER_BETA)
    taps *= up / taps.sum()  # unity DC gain after zero stuffing
    taps.setflags(write=False)
    return taps, half


def _apply_rational(x: np.ndarray, up: int, down: int, n_out: int) -> np.ndarray:
    h, half = _rational_filter(up, down)
    # upfirdn emits z[j*down] where z is the full convolution at the
    # intermediate rate; pre-padding the filter aligns the group delay onto
    # the output grid so the result is delay-free.
    pre = (-half) % down
    delay_out = (half + pre) // down
    h_padded = np.concatenate([np.zeros(pre), h]) if pre else h
    tail = (delay_out + 1) * down // up + 2
    xp = np.concatenate([x, np.zeros(tail)])
    y = upfirdn(h_padded, xp, up=up, down=down)
    y = y[delay_out : delay_out + n_out]
    if y.size < n_out:  # defensive; upfirdn output should always cover
        y = np.concatenate([y, np.zeros(n_out - y.size)])
    return np.ascontiguousarray(y)


def measure_snr(reference: AudioBuffer, test: AudioBuffer) -> float:
    """10*log10 of reference energy over residual (test - reference) energy.

    Returns +inf when test equals reference; raises on a silent reference.
    """
    if reference.sample_rate != test.sample_rate:
        raise ParameterError("SNR requires matching sample rates")
    if len(reference) != len(test):
        raise ParameterError(
            f"SNR requires equal lengths, got {len(reference)} vs {len(test)}"
        )
    ref = reference.samples
    e_ref = float(np.dot(ref, ref))
    if e_ref == 0.0:
        raise UndefinedSnrError("SNR undefined for a zero-energy reference")
    diff = test.samples - ref
    e_err = float(np.dot(diff, diff))
    if e_err == 0.0:
        return math.inf
    return 10.0 * math.log10(e_ref / e_err)
