import numpy as np
import pytest
from scipy.stats import ks_2samp

from markbench.audio import AudioBuffer, measure_snr
from markbench.errors import ParameterError
from markbench.transforms import add_noise, dropout, gain, quantize, time_shift
from markbench.watermark import (
    SpreadSpectrumWatermark,
    WatermarkKey,
    WatermarkLengthError,
    detect,
    embed,
)

KEY = WatermarkKey(key=42)
OTHER = WatermarkKey(key=43)


def test_key_validation():
    with pytest.raises(ParameterError):
        WatermarkKey(key=1, band_lo_hz=0.0)
    with pytest.raises(ParameterError):
        WatermarkKey(key=1, band_lo_hz=4000.0, band_hi_hz=300.0)
    with pytest.raises(ParameterError):
        WatermarkKey(key=1, band_hi_hz=9000.0)  # beyond native Nyquist
    with pytest.raises(ParameterError):
        WatermarkKey(key=1, strength_db=3.0)


def test_key_serialization_round_trip():
    text = KEY.to_json()
    assert WatermarkKey.from_json(text) == KEY


def test_embed_rejects_wrong_rate_and_short_input(speech_clips_16k):
    clip = speech_clips_16k[0]
    bad_rate = AudioBuffer(clip.samples, 22050)
    with pytest.raises(ParameterError):
        embed(bad_rate, KEY)
    short = AudioBuffer(clip.samples[:8000], 16000)
    with pytest.raises(WatermarkLengthError):
        embed(short, KEY)


def test_embed_snr_matches_strength(speech_clips_16k):
    for clip in speech_clips_16k[:8]:
        marked = embed(clip, KEY)
        assert len(marked) == len(clip)
        assert abs(measure_snr(clip, marked) - 30.0) <= 1.0


def test_embed_deterministic(speech_clips_16k):
    clip = speech_clips_16k[0]
    assert np.array_equal(embed(clip, KEY).samples, embed(clip, KEY).samples)


def test_detect_scores_separate(speech_clips_16k):
    wm_scores = np.array([detect(embed(c, KEY), KEY) for c in speech_clips_16k])
    clean_scores = np.array([detect(c, KEY) for c in speech_clips_16k])
    # frozen from the 24-clip synthetic corpus: wm min 0.24, clean max 0.078
    assert wm_scores.min() > 0.2
    assert np.percentile(clean_scores, 99) < np.median(wm_scores)
    assert clean_scores.max() < wm_scores.min()
    assert abs(clean_scores.mean()) < 0.05
    assert np.all(np.abs(clean_scores) <= 1.0) and np.all(np.abs(wm_scores) <= 1.0)


def test_wrong_key_scores_look_clean(speech_clips_16k):
    clean_scores = [detect(c, OTHER) for c in speech_clips_16k]
    wrong_key_scores = [detect(embed(c, KEY), OTHER) for c in speech_clips_16k]
    stat = ks_2samp(clean_scores, wrong_key_scores)
    assert stat.pvalue > 0.01


def test_strength_monotonicity(speech_clips_16k):
    clip = speech_clips_16k[0]
    strong = detect(embed(clip, KEY), KEY)
    weak_key = WatermarkKey(key=42, strength_db=-60.0)
    weak = detect(embed(clip, weak_key), weak_key)
    assert weak < strong


def test_invariance_under_benign_transforms(speech_clips_16k):
    """Gain, light quantization, and small shifts leave score distributions
    statistically indistinguishable from untouched watermarked audio."""
    marked = [embed(c, KEY) for c in speech_clips_16k]
    base = [detect(m, KEY) for m in marked]
    for fn in (
        lambda b: gain(b, 6.0),
        lambda b: dropout(b, 0.001, seed=3),
        lambda b: quantize(b, 12),
        lambda b: time_shift(b, 128),
    ):
        scores = [detect(fn(m), KEY) for m in marked]
        assert ks_2samp(base, scores).pvalue > 0.01
    # at the 1% dropout boundary the scores shift down (clicks land in the
    # quiet bins carrying the evidence) but detection itself is unaffected
    clean = [detect(c, KEY) for c in speech_clips_16k]
    shifted = [detect(dropout(m, 0.01, seed=3), KEY) for m in marked]
    assert min(shifted) > max(clean)


def test_noise_fragility_trend(speech_clips_16k):
    marked = [embed(c, KEY) for c in speech_clips_16k[:12]]
    medians = []
    for snr in (20.0, 10.0, 0.0):
        medians.append(
            np.median([detect(add_noise(m, snr, seed=i), KEY) for i, m in enumerate(marked)])
        )
    assert medians[0] > medians[1] > medians[2]


def test_handle_matches_functions(speech_clips_16k):
    clip = speech_clips_16k[0]
    handle = SpreadSpectrumWatermark(KEY)
    assert np.array_equal(handle.embed(clip).samples, embed(clip, KEY).samples)
    assert handle.detect(clip) == detect(clip, KEY)
    assert handle.native_rate == 16000
    assert handle.watermark_id == "ss:42"
