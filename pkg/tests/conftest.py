import warnings

import numpy as np
import pytest

from markbench.audio import AudioBuffer
from markbench.corpus import synthetic_clip

warnings.filterwarnings("ignore", message="calibrating on only")
warnings.filterwarnings("ignore", message="cascade search over only")


def sine(freq_hz, duration_s=2.0, rate=16000, amplitude=0.5, fade=0.02):
    """Test tone with short fades so filters see no onset clicks."""
    n = round(duration_s * rate)
    t = np.arange(n) / rate
    x = amplitude * np.sin(2 * np.pi * freq_hz * t)
    k = round(fade * rate)
    if k:
        ramp = np.sin(np.linspace(0, np.pi / 2, k)) ** 2
        x[:k] *= ramp
        x[-k:] *= ramp[::-1]
    return AudioBuffer(x, rate)


def peak_frequency(buffer):
    """FFT-peak oracle: dominant frequency of a buffer, in Hz."""
    w = np.hanning(len(buffer))
    spec = np.abs(np.fft.rfft(buffer.samples * w))
    return float(np.argmax(spec) * buffer.sample_rate / len(buffer))


def interior_rms_db(outbuf, inbuf, skip=4000):
    """Steady-state level change in dB, ignoring filter edge transients."""
    o = outbuf.samples[skip:-skip]
    i = inbuf.samples[skip:-skip]
    return 10.0 * np.log10(np.mean(o**2) / np.mean(i**2))


@pytest.fixture(scope="session")
def speech_clips_16k():
    """24 speech-like clips at the watermark's native rate."""
    return [synthetic_clip(123, i, duration_s=5.0, sample_rate=16000) for i in range(24)]


@pytest.fixture(scope="session")
def noise_16k():
    rng = np.random.default_rng(99)
    return AudioBuffer(rng.standard_normal(32000) * 0.1, 16000)
