"""Subprocess protocol for external watermarks, transforms, and metrics.

Audio crosses the boundary as WAV files in a per-call temporary directory;
scores and metric maps come back as one JSON object on stdout. The contract:

    executable <role> --in <wav> [--ref <wav>] --out <wav> [static args...]

where <role> is one of embed/detect/transform/metric. Exit 0 means success;
anything else is a plugin failure carrying the captured stderr. The trial
seed is passed in the MARKBENCH_SEED environment variable. Roles that answer
on stdout (detect, metric) may ignore --out.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field

from .audio import AudioBuffer
from .errors import MarkbenchError
from .wavio import read_wav, write_wav

__all__ = [
    "PluginSpec",
    "PluginError",
    "PluginFailure",
    "PluginTimeout",
    "PluginProtocolError",
    "run_transform_plugin",
    "run_embed_plugin",
    "run_detect_plugin",
    "run_metric_plugin",
    "PluginWatermark",
]

ROLES = ("embedder", "detector", "transform", "metric")
_ROLE_SUBCOMMAND = {"embedder": "embed", "detector": "detect", "transform": "transform", "metric": "metric"}


class PluginError(MarkbenchError):
    """Base for everything that can go wrong across the subprocess boundary."""


class PluginFailure(PluginError):
    """Plugin exited nonzero; message includes its stderr."""


class PluginTimeout(PluginError):
    """Plugin exceeded its time budget (after one retry)."""


class PluginProtocolError(PluginError):
    """Plugin succeeded but its output violates the protocol."""


@dataclass(frozen=True)
class PluginSpec:
    executable: str
    role: str
    args: tuple = field(default_factory=tuple)
    timeout: float = 60.0
    workdir: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise MarkbenchError(f"unknown plugin role {self.role!r}; choose from {ROLES}")
        if not self.executable:
            raise MarkbenchError("plugin executable must be set")
        if self.timeout <= 0:
            raise MarkbenchError("plugin timeout must be positive")
        object.__setattr__(self, "args", tuple(str(a) for a in self.args))

    def to_dict(self) -> dict:
        return {
            "executable": self.executable,
            "role": self.role,
            "args": list(self.args),
            "timeout": self.timeout,
            "workdir": self.workdir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PluginSpec":
        return cls(
            executable=d["executable"],
            role=d["role"],
            args=tuple(d.get("args", ())),
            timeout=float(d.get("timeout", 60.0)),
            workdir=d.get("workdir"),
        )


def _invoke(spec: PluginSpec, in_buf: AudioBuffer, ref_buf: AudioBuffer | None, seed: int):
    """Run one plugin call; returns (stdout, out_wav_path or None, tmpdir)."""
    tmpdir = tempfile.mkdtemp(prefix="markbench-plugin-")
    in_path = os.path.join(tmpdir, "in.wav")
    out_path = os.path.join(tmpdir, "out.wav")
    write_wav(in_buf, in_path, encoding="float32")
    cmd = [spec.executable, _ROLE_SUBCOMMAND[spec.role], "--in", in_path]
    if ref_buf is not None:
        ref_path = os.path.join(tmpdir, "ref.wav")
        write_wav(ref_buf, ref_path, encoding="float32")
        cmd += ["--ref", ref_path]
    cmd += ["--out", out_path]
    cmd += list(spec.args)
    env = dict(os.environ)
    env["MARKBENCH_SEED"] = str(int(seed))

    attempts = 0
    while True:
        attempts += 1
        try:
            proc = subprocess.run(
                cmd,
                capture_output=True,
                timeout=spec.timeout,
                env=env,
                cwd=spec.workdir,
            )
            break
        except subprocess.TimeoutExpired:
            if attempts > 1:  # one retry, e.g. for model warm-up
                shutil.rmtree(tmpdir, ignore_errors=True)
                raise PluginTimeout(
                    f"plugin {spec.executable!r} timed out after {spec.timeout}s (retried once)"
                ) from None
        except OSError as exc:
            shutil.rmtree(tmpdir, ignore_errors=True)
            raise PluginFailure(f"cannot run plugin {spec.executable!r}: {exc}") from exc

    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace").strip()
        shutil.rmtree(tmpdir, ignore_errors=True)
        raise PluginFailure(
            f"plugin {spec.executable!r} exited {proc.returncode}: {stderr or '<no stderr>'}"
        )
    return proc.stdout.decode("utf-8", "replace"), out_path, tmpdir


def _read_audio_result(spec: PluginSpec, out_path: str, tmpdir: str) -> AudioBuffer:
    try:
        if not os.path.exists(out_path):
            raise PluginProtocolError(
                f"plugin {spec.executable!r} exited 0 but wrote no output WAV"
            )
        try:
            return read_wav(out_path)
        except MarkbenchError as exc:
            raise PluginProtocolError(
                f"plugin {spec.executable!r} wrote an unreadable WAV: {exc}"
            ) from exc
    finally:
        shutil.rmtree(tmpdir, ignore_errors=True)


def _parse_json(spec: PluginSpec, stdout: str) -> dict:
    try:
        value = json.loads(stdout.strip())
    except json.JSONDecodeError as exc:
        raise PluginProtocolError(
            f"plugin {spec.executable!r} stdout is not a JSON object: {stdout[:200]!r}"
        ) from exc
    if not isinstance(value, dict):
        raise PluginProtocolError(
            f"plugin {spec.executable!r} printed JSON of type {type(value).__name__}, expected object"
        )
    return value


def run_transform_plugin(spec: PluginSpec, buffer: AudioBuffer, seed: int = 0) -> AudioBuffer:
    stdout, out_path, tmpdir = _invoke(spec, buffer, None, seed)
    return _read_audio_result(spec, out_path, tmpdir)


def run_embed_plugin(spec: PluginSpec, buffer: AudioBuffer, seed: int = 0) -> AudioBuffer:
    stdout, out_path, tmpdir = _invoke(spec, buffer, None, seed)
    return _read_audio_result(spec, out_path, tmpdir)


def run_detect_plugin(spec: PluginSpec, buffer: AudioBuffer, seed: int = 0) -> float:
    stdout, _out_path, tmpdir = _invoke(spec, buffer, None, seed)
    shutil.rmtree(tmpdir, ignore_errors=True)
    payload = _parse_json(spec, stdout)
    if "score" not in payload or not isinstance(payload["score"], (int, float)):
        raise PluginProtocolError(
            f"plugin {spec.executable!r} must print {{\"score\": <number>}}, got {payload!r}"
        )
    return float(payload["score"])


def run_metric_plugin(
    spec: PluginSpec, reference: AudioBuffer, test: AudioBuffer, seed: int = 0
) -> dict:
    stdout, _out_path, tmpdir = _invoke(spec, test, reference, seed)
    shutil.rmtree(tmpdir, ignore_errors=True)
    payload = _parse_json(spec, stdout)
    metrics = payload.get("metrics")
    if not isinstance(metrics, dict) or not all(
        isinstance(v, (int, float)) for v in metrics.values()
    ):
        raise PluginProtocolError(
            f"plugin {spec.executable!r} must print {{\"metrics\": {{name: number}}}}, got {payload!r}"
        )
    return {str(k): float(v) for k, v in metrics.items()}


class PluginWatermark:
    """Embed/detect handle backed by plugin processes (one spec per role)."""

    def __init__(self, embed_spec: PluginSpec, detect_spec: PluginSpec, native_rate: int, seed: int = 0):
        if embed_spec.role != "embedder" or detect_spec.role != "detector":
            raise MarkbenchError("PluginWatermark needs an embedder spec and a detector spec")
        self.embed_spec = embed_spec
        self.detect_spec = detect_spec
        self.native_rate = int(native_rate)
        self.seed = int(seed)

    @property
    def watermark_id(self) -> str:
        return f"plugin:{os.path.basename(self.embed_spec.executable)}"

    def embed(self, buffer: AudioBuffer) -> AudioBuffer:
        return run_embed_plugin(self.embed_spec, buffer, seed=self.seed)

    def detect(self, buffer: AudioBuffer) -> float:
        return run_detect_plugin(self.detect_spec, buffer, seed=self.seed)
