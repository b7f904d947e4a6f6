import glob
import os
import stat
import textwrap

import numpy as np
import pytest

from markbench.audio import AudioBuffer
from markbench.errors import MarkbenchError
from markbench.plugins import (
    PluginFailure,
    PluginProtocolError,
    PluginSpec,
    PluginTimeout,
    PluginWatermark,
    run_detect_plugin,
    run_embed_plugin,
    run_metric_plugin,
    run_transform_plugin,
)
from markbench.transforms import TransformSpec, apply

from conftest import sine

STUB_SOURCE = textwrap.dedent(
    """\
    #!/usr/bin/env python3
    import json, os, shutil, sys, time

    args = sys.argv[1:]
    role = args[0]

    def opt(name, default=None):
        return args[args.index(name) + 1] if name in args else default

    mode = opt("--mode", "echo")
    inp, out, ref = opt("--in"), opt("--out"), opt("--ref")

    if mode == "echo":
        shutil.copyfile(inp, out)
    elif mode == "score":
        print(json.dumps({"score": 0.7}))
    elif mode == "score_seed":
        print(json.dumps({"score": float(os.environ["MARKBENCH_SEED"])}))
    elif mode == "metric":
        assert ref is not None
        print(json.dumps({"metrics": {"mos": 4.2, "asr_cer": 0.01}}))
    elif mode == "fail":
        print("model missing", file=sys.stderr)
        sys.exit(3)
    elif mode == "sleep":
        time.sleep(30)
    elif mode == "garbage":
        print("not json at all")
    elif mode == "badwav":
        with open(out, "wb") as f:
            f.write(b"junk")
    elif mode == "noscore":
        print(json.dumps({"other": 1}))
    sys.exit(0)
    """
)


@pytest.fixture(scope="module")
def stub(tmp_path_factory):
    path = tmp_path_factory.mktemp("stub") / "stub_plugin.py"
    path.write_text(STUB_SOURCE)
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


def spec_for(stub, role, mode, timeout=30.0):
    return PluginSpec(executable=stub, role=role, args=("--mode", mode), timeout=timeout)


def test_spec_validation(stub):
    with pytest.raises(MarkbenchError):
        PluginSpec(executable=stub, role="oracle")
    with pytest.raises(MarkbenchError):
        PluginSpec(executable="", role="transform")
    with pytest.raises(MarkbenchError):
        PluginSpec(executable=stub, role="transform", timeout=0)
    assert PluginSpec.from_dict(spec_for(stub, "metric", "metric").to_dict()).role == "metric"


def test_echo_transform_bit_identical(stub):
    buf = sine(440, duration_s=0.5)
    out = run_transform_plugin(spec_for(stub, "transform", "echo"), buf)
    assert out.sample_rate == buf.sample_rate
    assert np.array_equal(out.samples, buf.samples.astype(np.float32).astype(np.float64))


def test_embed_role_echo(stub):
    buf = sine(330, duration_s=0.5)
    out = run_embed_plugin(spec_for(stub, "embedder", "echo"), buf)
    assert len(out) == len(buf)


def test_detector_score_parsing(stub):
    buf = sine(440, duration_s=0.25)
    assert run_detect_plugin(spec_for(stub, "detector", "score"), buf) == 0.7


def test_seed_passes_through_environment(stub):
    buf = sine(440, duration_s=0.25)
    assert run_detect_plugin(spec_for(stub, "detector", "score_seed"), buf, seed=123) == 123.0


def test_metric_plugin_returns_map(stub):
    buf = sine(440, duration_s=0.25)
    values = run_metric_plugin(spec_for(stub, "metric", "metric"), buf, buf)
    assert values == {"mos": 4.2, "asr_cer": 0.01}


def test_failure_carries_stderr(stub):
    buf = sine(440, duration_s=0.25)
    with pytest.raises(PluginFailure, match="model missing"):
        run_transform_plugin(spec_for(stub, "transform", "fail"), buf)


def test_timeout_raises_after_retry(stub):
    buf = sine(440, duration_s=0.25)
    with pytest.raises(PluginTimeout):
        run_detect_plugin(spec_for(stub, "detector", "sleep", timeout=0.5), buf)


def test_protocol_errors(stub):
    buf = sine(440, duration_s=0.25)
    with pytest.raises(PluginProtocolError, match="not a JSON object"):
        run_detect_plugin(spec_for(stub, "detector", "garbage"), buf)
    with pytest.raises(PluginProtocolError, match="score"):
        run_detect_plugin(spec_for(stub, "detector", "noscore"), buf)
    with pytest.raises(PluginProtocolError, match="unreadable WAV"):
        run_transform_plugin(spec_for(stub, "transform", "badwav"), buf)
    with pytest.raises(PluginProtocolError, match="no output WAV"):
        run_transform_plugin(spec_for(stub, "transform", "score"), buf)


def test_missing_executable_is_failure():
    buf = sine(440, duration_s=0.25)
    spec = PluginSpec(executable="/nonexistent/plugin", role="transform")
    with pytest.raises(PluginFailure, match="cannot run"):
        run_transform_plugin(spec, buf)


def test_temp_dirs_cleaned_up(stub):
    import tempfile

    before = set(glob.glob(os.path.join(tempfile.gettempdir(), "markbench-plugin-*")))
    buf = sine(440, duration_s=0.25)
    run_transform_plugin(spec_for(stub, "transform", "echo"), buf)
    with pytest.raises(PluginFailure):
        run_transform_plugin(spec_for(stub, "transform", "fail"), buf)
    after = set(glob.glob(os.path.join(tempfile.gettempdir(), "markbench-plugin-*")))
    assert after == before


def test_plugin_transform_kind_through_apply(stub):
    buf = sine(440, duration_s=0.5)
    spec = TransformSpec(
        "plugin", {"executable": stub, "args": ["--mode", "echo"], "timeout": 30.0}, seed=9
    )
    out = apply(spec, buf)
    assert np.array_equal(out.samples, buf.samples.astype(np.float32).astype(np.float64))


def test_plugin_watermark_handle(stub):
    buf = sine(440, duration_s=1.5)
    wm = PluginWatermark(
        embed_spec=spec_for(stub, "embedder", "echo"),
        detect_spec=spec_for(stub, "detector", "score"),
        native_rate=16000,
    )
    assert wm.native_rate == 16000
    assert len(wm.embed(buf)) == len(buf)
    assert wm.detect(buf) == 0.7
