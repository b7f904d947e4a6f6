"""Signal-processing transformations used as watermark-removal conditions.

Each transformation is a pure function, and :func:`apply` dispatches a
declarative :class:`TransformSpec` to it. Any randomized parameter (noise
draw, equalizer gains, pitch/speed/stretch factors, dropout mask, synthetic
reverb tail) is drawn from a counter-based generator keyed by the spec's
seed, so equal (spec, input) pairs give bit-equal outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from .audio import (
    DEFAULT_STFT,
    AudioBuffer,
    StftParams,
    resample,
    resample_by_factor,
)
from .errors import ParameterError, UndefinedSnrError
from .rng import make_rng

__all__ = [
    "TransformSpec",
    "TRANSFORM_KINDS",
    "apply",
    "add_noise",
    "equalize",
    "low_pass",
    "high_pass",
    "pitch_shift",
    "speed",
    "time_stretch",
    "reverb",
    "gain",
    "dropout",
    "quantize",
    "time_shift",
    "make_exponential_ir",
    "DEFAULT_EQ_BANDS",
]

DEFAULT_EQ_BANDS = (125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0)


@dataclass(frozen=True)
class TransformSpec:
    """One transformation: kind, kind-specific params, and a draw seed."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ParameterError(
                f"unknown transform kind {self.kind!r}; known: {sorted(TRANSFORM_KINDS)}"
            )

    def with_seed(self, seed: int) -> "TransformSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        return cls(kind=d["kind"], params=dict(d.get("params", {})), seed=int(d.get("seed", 0)))


def _draw(rng, params, fixed_key, range_key, lo, hi, default=None):
    """Fixed param wins; otherwise draw uniformly from the (clamped) range."""
    if fixed_key in params:
        return float(params[fixed_key])
    if range_key in params:
        a, b = params[range_key]
        a, b = float(a), float(b)
        if not (lo <= a <= b <= hi):
            raise ParameterError(f"{range_key}=[{a}, {b}] outside legal [{lo}, {hi}]")
        return float(rng.uniform(a, b))
    if default is None:
        raise ParameterError(f"missing parameter {fixed_key!r} (or {range_key!r})")
    return float(default)


def add_noise(buffer: AudioBuffer, snr_db: float, seed: int = 0) -> AudioBuffer:
    """Add white Gaussian noise scaled so the measured SNR equals snr_db.

    The realized noise draw is rescaled to the target, so the contract holds
    exactly rather than only in expectation. +inf is the no-op sentinel.
    """
    if snr_db == math.inf:
        return buffer
    if not math.isfinite(snr_db):
        raise ParameterError(f"snr_db must be finite or +inf, got {snr_db}")
    x = buffer.samples
    e_sig = float(np.dot(x, x))
    if e_sig == 0.0:
        raise UndefinedSnrError("cannot target an SNR against silent input")
    noise = make_rng(seed, "noise").standard_normal(x.size)
    e_noise = float(np.dot(noise, noise))
    scale = math.sqrt(e_sig / (e_noise * 10.0 ** (snr_db / 10.0)))
    return AudioBuffer(x + scale * noise, buffer.sample_rate)


def _peaking_sos(center_hz: float, rate: int, gain_db: float, q: float = 1.0) -> np.ndarray:
    a_lin = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * math.pi * center_hz / rate
    alpha = math.sin(w0) / (2.0 * q)
    b = np.array([1.0 + alpha * a_lin, -2.0 * math.cos(w0), 1.0 - alpha * a_lin])
    a = np.array([1.0 + alpha / a_lin, -2.0 * math.cos(w0), 1.0 - alpha / a_lin])
    return np.concatenate([b, a]) / a[0]


def equalize(buffer: AudioBuffer, gains_db, bands=DEFAULT_EQ_BANDS) -> AudioBuffer:
    """Cascade of peaking filters, one per band, each hitting its gain at center."""
    gains = np.asarray(gains_db, dtype=np.float64)
    centers = np.asarray(bands, dtype=np.float64)
    if gains.shape != centers.shape:
        raise ParameterError("equalize needs one gain per band")
    if np.any(np.diff(centers) <= 0):
        raise ParameterError("band centers must be strictly increasing")
    nyquist = buffer.sample_rate / 2.0
    if centers[0] <= 0 or centers[-1] >= nyquist:
        raise ParameterError(f"band centers must lie in (0, {nyquist}) Hz")
    active = [(c, g) for c, g in zip(centers, gains) if g != 0.0]
    if not active:
        return buffer
    sos = np.vstack([_peaking_sos(c, buffer.sample_rate, g) for c, g in active])
    return AudioBuffer(sosfilt(sos, buffer.samples), buffer.sample_rate)


def _butter_filter(buffer: AudioBuffer, cutoff_hz: float, btype: str) -> AudioBuffer:
    nyquist = buffer.sample_rate / 2.0
    if not (0.0 < cutoff_hz < nyquist):
        raise ParameterError(f"cutoff {cutoff_hz} Hz outside (0, {nyquist}) Hz")
    sos = butter(8, cutoff_hz, btype=btype, fs=buffer.sample_rate, output="sos")
    return AudioBuffer(sosfilt(sos, buffer.samples), buffer.sample_rate)


def low_pass(buffer: AudioBuffer, cutoff_hz: float) -> AudioBuffer:
    return _butter_filter(buffer, cutoff_hz, "lowpass")


def high_pass(buffer: AudioBuffer, cutoff_hz: float) -> AudioBuffer:
    return _butter_filter(buffer, cutoff_hz, "highpass")


def speed(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Playback-speed change by resampling: pitch scales with the factor."""
    if not (0.5 <= factor <= 2.0):
        raise ParameterError(f"speed factor {factor} outside [0.5, 2.0]")
    if factor == 1.0:
        return buffer
    y = resample_by_factor(buffer, 1.0 / factor)
    n_out = round(len(buffer) / factor)
    return AudioBuffer(_fit_length(y, n_out), buffer.sample_rate)


def time_stretch(
    buffer: AudioBuffer, factor: float, params: StftParams = DEFAULT_STFT
) -> AudioBuffer:
    """Phase-vocoder stretch: duration scales by 1/factor, pitch is preserved.

    Analysis frames are taken at positions i*hop*factor (rounded per frame,
    with phase propagation using the actual inter-frame advance), synthesis
    overlap-adds at the fixed hop, and peak-locked phases keep partials
    coherent across bins.
    """
    if not (0.5 <= factor <= 2.0):
        raise ParameterError(f"stretch factor {factor} outside [0.5, 2.0]")
    n = len(buffer)
    n_out = round(n / factor)
    if factor == 1.0 or n == 0:
        return AudioBuffer(_fit_length(buffer.samples, n_out), buffer.sample_rate)

    fft, hop = params.fft_size, params.hop_size
    win = np.hanning(fft + 1)[:fft]  # periodic hann
    n_frames = int(math.ceil((n_out + fft) / hop)) + 1
    positions = np.rint(np.arange(n_frames) * hop * factor).astype(np.int64)
    x = np.concatenate([buffer.samples, np.zeros(positions[-1] + fft - n + 1)])

    bins = fft // 2 + 1
    omega = 2.0 * np.pi * np.arange(bins) / fft  # rad/sample per bin
    out_len = hop * (n_frames - 1) + fft
    acc = np.zeros(out_len)
    norm = np.zeros(out_len)
    wsq = win * win

    prev_phase = None
    synth_phase = None
    for i in range(n_frames):
        frame = x[positions[i] : positions[i] + fft] * win
        spec = np.fft.rfft(frame)
        mag = np.abs(spec)
        phase = np.angle(spec)
        if prev_phase is None:
            synth_phase = phase.copy()
        else:
            dt = positions[i] - positions[i - 1]
            dev = _principal(phase - prev_phase - omega * dt)
            inst = omega + dev / dt
            peaks = _spectral_peaks(mag)
            synth_phase = synth_phase + inst * hop
            if peaks.size:
                # lock non-peak bins to their region's peak rotation
                regions = _peak_regions(peaks, bins)
                rot = synth_phase[peaks] - phase[peaks]
                synth_phase = phase + rot[regions]
        prev_phase = phase
        y = np.fft.irfft(mag * np.exp(1j * synth_phase), n=fft) * win
        sl = slice(i * hop, i * hop + fft)
        acc[sl] += y
        norm[sl] += wsq
    acc /= np.maximum(norm, 1e-12)
    return AudioBuffer(_fit_length(acc, n_out), buffer.sample_rate)


def _principal(phase: np.ndarray) -> np.ndarray:
    return phase - 2.0 * np.pi * np.round(phase / (2.0 * np.pi))


def _spectral_peaks(mag: np.ndarray) -> np.ndarray:
    interior = (mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])
    return np.flatnonzero(interior) + 1


def _peak_regions(peaks: np.ndarray, n_bins: int) -> np.ndarray:
    """Index of the owning peak for every bin (split at midpoints)."""
    mids = (peaks[:-1] + peaks[1:]) / 2.0
    return np.searchsorted(mids, np.arange(n_bins))


def pitch_shift(buffer: AudioBuffer, semitones: float) -> AudioBuffer:
    """Shift pitch by a semitone amount at unchanged duration (stretch + resample)."""
    if abs(semitones) > 12.0:
        raise ParameterError(f"|semitones| must be <= 12, got {semitones}")
    n = len(buffer)
    if semitones == 0.0 or n == 0:
        return buffer
    ratio = 2.0 ** (semitones / 12.0)
    stretched = time_stretch(buffer, 1.0 / ratio)  # length ~ n * ratio, pitch kept
    shifted = resample_by_factor(stretched, 1.0 / ratio)  # back to ~n, pitch * ratio
    return AudioBuffer(_fit_length(shifted, n), buffer.sample_rate)


def reverb(buffer: AudioBuffer, impulse_response: AudioBuffer) -> AudioBuffer:
    """Full-wet convolution with the IR, truncated to the input length and
    renormalized to the input RMS so level changes do not masquerade as
    quality loss."""
    ir = impulse_response
    if ir.sample_rate != buffer.sample_rate:
        ir = resample(ir, buffer.sample_rate)
    if len(ir) == 0:
        raise ParameterError("impulse response is empty")
    wet = fftconvolve(buffer.samples, ir.samples)[: len(buffer)]
    rms_in = float(np.sqrt(np.mean(buffer.samples**2))) if len(buffer) else 0.0
    rms_out = float(np.sqrt(np.mean(wet**2))) if wet.size else 0.0
    if rms_in > 0.0 and rms_out > 0.0:
        wet *= rms_in / rms_out
    return AudioBuffer(wet, buffer.sample_rate)


def make_exponential_ir(
    rt60_s: float, sample_rate: int, duration_s: float | None = None, seed: int = 0
) -> AudioBuffer:
    """Synthetic room tail: white noise under a 10^(-3 t / RT60) envelope."""
    if rt60_s <= 0:
        raise ParameterError("rt60_s must be positive")
    if duration_s is None:
        duration_s = rt60_s
    n = max(1, round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    envelope = 10.0 ** (-3.0 * t / rt60_s)
    tail = make_rng(seed, "ir").standard_normal(n) * envelope
    tail /= np.max(np.abs(tail))
    return AudioBuffer(tail, sample_rate)


def gain(buffer: AudioBuffer, db: float) -> AudioBuffer:
    if db == 0.0:
        return buffer
    return AudioBuffer(buffer.samples * 10.0 ** (db / 20.0), buffer.sample_rate)


def dropout(buffer: AudioBuffer, p: float, seed: int = 0) -> AudioBuffer:
    """Zero each sample independently with probability p."""
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"dropout probability {p} outside [0, 1]")
    if p == 0.0:
        return buffer
    keep = make_rng(seed, "dropout").random(len(buffer)) >= p
    return AudioBuffer(buffer.samples * keep, buffer.sample_rate)


def quantize(buffer: AudioBuffer, bits: int) -> AudioBuffer:
    """Round to 2^bits uniform levels over [-1, 1)."""
    if not (2 <= int(bits) <= 16):
        raise ParameterError(f"quantize bits must be in [2, 16], got {bits}")
    step = 2.0 ** (1 - int(bits))
    q = np.copysign(np.floor(np.abs(buffer.samples / step) + 0.5), buffer.samples) * step
    return AudioBuffer(np.clip(q, -1.0, 1.0 - step), buffer.sample_rate)


def time_shift(buffer: AudioBuffer, shift: int) -> AudioBuffer:
    """Shift by a signed sample count, zero-padding the vacated end."""
    n = len(buffer)
    shift = int(shift)
    out = np.zeros(n)
    if shift >= 0:
        k = min(shift, n)
        out[k:] = buffer.samples[: n - k]
    else:
        k = min(-shift, n)
        out[: n - k] = buffer.samples[k:]
    return AudioBuffer(out, buffer.sample_rate)


def _fit_length(x: np.ndarray, n: int) -> np.ndarray:
    if x.size >= n:
        return x[:n]
    return np.concatenate([x, np.zeros(n - x.size)])


# --- dispatch -------------------------------------------------------------


def _apply_noise(spec, buffer, rng):
    snr = spec.params.get("snr_db", math.inf)
    return add_noise(buffer, float(snr), seed=spec.seed)


def _apply_equalize(spec, buffer, rng):
    bands = spec.params.get("bands", DEFAULT_EQ_BANDS)
    if "gains_db" in spec.params:
        gains = spec.params["gains_db"]
    else:
        lo, hi = spec.params.get("gain_range", (-1.0, 1.0))
        gains = rng.uniform(float(lo), float(hi), size=len(bands))
    return equalize(buffer, gains, bands)


def _apply_pitch(spec, buffer, rng):
    semis = _draw(rng, spec.params, "semitones", "semitone_range", -12.0, 12.0)
    return pitch_shift(buffer, semis)


def _apply_speed(spec, buffer, rng):
    factor = _draw(rng, spec.params, "factor", "factor_range", 0.5, 2.0)
    return speed(buffer, factor)


def _apply_stretch(spec, buffer, rng):
    factor = _draw(rng, spec.params, "factor", "factor_range", 0.5, 2.0)
    return time_stretch(buffer, factor)


def _apply_reverb(spec, buffer, rng):
    if "ir_path" in spec.params:
        from .wavio import read_wav

        ir = read_wav(spec.params["ir_path"])
    else:
        ir = make_exponential_ir(
            rt60_s=float(spec.params.get("rt60_s", 0.5)),
            sample_rate=buffer.sample_rate,
            duration_s=spec.params.get("ir_duration_s"),
            seed=spec.seed,
        )
    return reverb(buffer, ir)


def _apply_plugin(spec, buffer, rng):
    from .plugins import PluginSpec, run_transform_plugin

    plugin = PluginSpec.from_dict({"role": "transform", **spec.params})
    return run_transform_plugin(plugin, buffer, seed=spec.seed)


def _apply_denoise(spec, buffer, rng):
    from .attacks import denoise_attack

    return denoise_attack(
        buffer,
        float(spec.params.get("snr_db", math.inf)),
        seed=spec.seed,
        oversubtraction=float(spec.params.get("oversubtraction", 1.5)),
    )


TRANSFORM_KINDS = {
    "noise": _apply_noise,
    "equalize": _apply_equalize,
    "low_pass": lambda s, b, r: low_pass(b, float(s.params["cutoff_hz"])),
    "high_pass": lambda s, b, r: high_pass(b, float(s.params["cutoff_hz"])),
    "pitch_shift": _apply_pitch,
    "speed": _apply_speed,
    "time_stretch": _apply_stretch,
    "reverb": _apply_reverb,
    "gain": lambda s, b, r: gain(b, float(s.params.get("db", 0.0))),
    "dropout": lambda s, b, r: dropout(b, float(s.params["p"]), seed=s.seed),
    "quantize": lambda s, b, r: quantize(b, int(s.params["bits"])),
    "time_shift": lambda s, b, r: time_shift(b, int(s.params["samples"])),
    "plugin": _apply_plugin,
    "denoise": _apply_denoise,
    "identity": lambda s, b, r: b,
}


def apply(spec: TransformSpec, buffer: AudioBuffer) -> AudioBuffer:
    """Apply one TransformSpec; the output keeps the input sample rate."""
    rng = make_rng(spec.seed, spec.kind)
    out = TRANSFORM_KINDS[spec.kind](spec, buffer, rng)
    if out.sample_rate != buffer.sample_rate:
        # only plugins can get here; built-in kinds preserve rate by construction
        out = resample(out, buffer.sample_rate)
    return out
