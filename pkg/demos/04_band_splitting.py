"""Watermark 44.1 kHz audio with a 16 kHz watermark via band splitting.

The low band is watermarked at the native rate and recombined with the
untouched high band; detection resamples down. The demo verifies the split
is lossless, the high band passes through transparently, and detection at
44.1 kHz matches the native-rate pipeline.
"""

import numpy as np

from markbench import (
    BandedWatermark,
    SpreadSpectrumWatermark,
    WatermarkKey,
    measure_snr,
    resample,
    split_bands,
)
from markbench.corpus import synthetic_clip

wm = SpreadSpectrumWatermark(WatermarkKey(key=42))
banded = BandedWatermark(wm)  # native 16 kHz inside 44.1 kHz audio

clips = [synthetic_clip(13, i, duration_s=5.0, sample_rate=44100) for i in range(10)]
clip = clips[0]

lo, hi = split_bands(clip, 8000.0)
print(f"band split at 8 kHz: reconstruction error {np.max(np.abs(lo.samples + hi.samples - clip.samples)):.2e}")

marked = banded.embed(clip)
print(f"44.1 kHz embed SNR: {measure_snr(clip, marked):.2f} dB")

scores_banded = [banded.detect(banded.embed(c)) for c in clips]
scores_native = [wm.detect(wm.embed(resample(c, 16000))) for c in clips]
print("\nper-clip scores, banded @44.1k vs native @16k:")
for b, n in zip(scores_banded, scores_native):
    print(f"  {b:.4f}  vs  {n:.4f}   (delta {b - n:+.1e})")

nulls = [banded.detect(c) for c in clips]
print(f"\nunwatermarked 44.1 kHz clips: max |score| = {max(abs(s) for s in nulls):.3f}")
