"""Cross-component conformance: the TypeScript mock adapter driven through
the plugin bridge. [SECONDARY] - requires `npm run build` under adapters/.
"""

from pathlib import Path

import numpy as np
import pytest

from markbench.evaluation import EvaluationPlan, evaluate
from markbench.plugins import (
    PluginFailure,
    PluginSpec,
    PluginTimeout,
    run_detect_plugin,
    run_embed_plugin,
    run_transform_plugin,
)

from conftest import sine

ADAPTER = Path(__file__).resolve().parent.parent / "adapters" / "dist" / "mock-adapter.js"

pytestmark = pytest.mark.skipif(
    not ADAPTER.exists(),
    reason="adapters not built (run: cd adapters && npm install && npm run build)",
)


def spec(role, *args, timeout=30.0):
    return PluginSpec(executable=str(ADAPTER), role=role, args=args, timeout=timeout)


def test_echo_identity_bit_exact():
    buf = sine(440, duration_s=0.5)
    out = run_transform_plugin(spec("transform", "--mode", "echo"), buf)
    assert out.sample_rate == buf.sample_rate
    assert np.array_equal(out.samples, buf.samples.astype(np.float32).astype(np.float64))


def test_score_parsing():
    buf = sine(440, duration_s=0.25)
    score = run_detect_plugin(spec("detector", "--mode", "score_const", "--score", "0.7"), buf)
    assert score == 0.7


def test_failure_mapping():
    buf = sine(440, duration_s=0.25)
    with pytest.raises(PluginFailure, match="model missing"):
        run_transform_plugin(spec("transform", "--mode", "fail"), buf)


def test_timeout_mapping():
    buf = sine(440, duration_s=0.25)
    with pytest.raises(PluginTimeout):
        run_detect_plugin(spec("detector", "--mode", "sleep", "--seconds", "30", timeout=1.0), buf)


def test_tone_embed_adds_low_level_tone():
    buf = sine(440, duration_s=1.0)
    out = run_embed_plugin(spec("embedder", "--mode", "tone_embed"), buf)
    assert len(out) == len(buf)
    diff = out.samples - buf.samples.astype(np.float32).astype(np.float64)
    rms = float(np.sqrt(np.mean(diff**2)))
    assert 0.005 < rms < 0.01  # a -40 dB tone
    spectrum = np.abs(np.fft.rfft(diff))
    peak_hz = np.argmax(spectrum) * buf.sample_rate / len(buf)
    assert abs(peak_hz - 1000.0) < 5.0


def test_end_to_end_evaluate_with_mock_watermark(tmp_path):
    """Full evaluation run with the adapter serving embed and detect."""
    plan = EvaluationPlan(
        corpus={
            "synthetic": {
                "n_clips": 6,
                "duration_s": 1.5,
                "sample_rate": 16000,
                "dir": str(tmp_path / "corpus"),
            }
        },
        watermark={
            "plugin": {
                "embed": {"executable": str(ADAPTER), "args": ["--mode", "tone_embed"], "timeout": 30.0},
                "detect": {"executable": str(ADAPTER), "args": ["--mode", "score_energy"], "timeout": 30.0},
                "native_rate": 16000,
            }
        },
        transforms=[
            {"label": "identity", "kind": "identity"},
            {"label": "gain-3db", "kind": "gain", "params": {"db": -3.0}},
        ],
        fpr=0.01,
        seed=13,
    )
    records, report = evaluate(plan)
    assert report.metadata["n_failures"] == 0
    assert len(report.rows) == 2
    for row in report.rows:
        assert row["n_clips"] == 6
        assert np.isfinite(row["threshold"])
        assert 0.0 <= row["tpr_at_fpr"] <= 1.0
    csv = report.to_csv()
    assert csv.splitlines()[0].startswith("transform,")
    assert report.metadata["watermark_id"] == "plugin:mock-adapter.js"
