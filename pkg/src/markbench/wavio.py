"""RIFF/WAVE reading and writing without third-party decoders.

Supports the three encodings the pipeline exchanges with plugins and users:
16-bit PCM, 24-bit PCM, and 32-bit IEEE float. Readers accept any channel
count (averaged to mono) and skip unrecognized chunks; writers emit canonical
little-endian files (a `fact` chunk is included for float data, as required
for non-PCM format tags).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .audio import AudioBuffer
from .errors import MarkbenchError

__all__ = [
    "read_wav",
    "write_wav",
    "WavFormatError",
    "UnsupportedWavError",
    "WavTruncationError",
]

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

ENCODINGS = ("pcm16", "pcm24", "float32")


class WavFormatError(MarkbenchError):
    """The container is malformed; the message names the offending chunk."""


class UnsupportedWavError(MarkbenchError):
    """Well-formed file, but an encoding this toolkit does not read."""


class WavTruncationError(MarkbenchError):
    """The data chunk ends before its declared size."""


def read_wav(path) -> AudioBuffer:
    """Read a WAV file to a mono buffer at its original sample rate.

    Multi-channel content is averaged to mono. Integer PCM maps to [-1, 1)
    by dividing by 2^(bits-1); float data is taken verbatim.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise WavFormatError("RIFF: file too short for a RIFF header")
    if raw[0:4] != b"RIFF":
        raise WavFormatError("RIFF: missing RIFF magic")
    if raw[8:12] != b"WAVE":
        raise WavFormatError("WAVE: missing WAVE form type")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        ck_id = raw[pos : pos + 4]
        (ck_size,) = struct.unpack_from("<I", raw, pos + 4)
        body_start = pos + 8
        name = ck_id.decode("latin-1").strip()
        if ck_id == b"data":
            if body_start + ck_size > len(raw):
                raise WavTruncationError(
                    f"data: chunk declares {ck_size} bytes but only "
                    f"{len(raw) - body_start} remain"
                )
            data = raw[body_start : body_start + ck_size]
        else:
            if body_start + ck_size > len(raw):
                raise WavFormatError(f"{name}: chunk overruns end of file")
            if ck_id == b"fmt ":
                fmt = _parse_fmt(raw[body_start : body_start + ck_size])
        pos = body_start + ck_size + (ck_size & 1)  # chunks are word-aligned

    if fmt is None:
        raise WavFormatError("fmt : chunk missing")
    if data is None:
        raise WavTruncationError("data: chunk missing")

    tag, channels, rate, bits = fmt
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        frame_bytes = 2 * channels
        _check_frames(data, frame_bytes)
        x = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif tag == _WAVE_FORMAT_PCM and bits == 24:
        frame_bytes = 3 * channels
        _check_frames(data, frame_bytes)
        b = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        x = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        x = ((x + (1 << 23)) % (1 << 24)) - (1 << 23)  # sign extend
        x = x.astype(np.float64) / float(1 << 23)
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        frame_bytes = 4 * channels
        _check_frames(data, frame_bytes)
        x = np.frombuffer(data, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavError(
            f"unsupported encoding: format tag 0x{tag:04x} at {bits} bits per sample"
        )

    if channels > 1:
        x = x.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(x, rate)


def _check_frames(data: bytes, frame_bytes: int):
    if len(data) % frame_bytes != 0:
        raise WavTruncationError(
            f"data: {len(data)} bytes is not a whole number of "
            f"{frame_bytes}-byte sample frames"
        )


def _parse_fmt(body: bytes):
    if len(body) < 16:
        raise WavFormatError(f"fmt : chunk is {len(body)} bytes, expected at least 16")
    tag, channels, rate, _byte_rate, _block_align, bits = struct.unpack_from("<HHIIHH", body, 0)
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        # actual format lives in the first two bytes of the SubFormat GUID
        if len(body) < 40:
            raise WavFormatError("fmt : extensible header too short for SubFormat")
        (tag,) = struct.unpack_from("<H", body, 24)
    if channels < 1:
        raise WavFormatError("fmt : channel count is zero")
    if rate < 1:
        raise WavFormatError("fmt : sample rate is zero")
    return tag, channels, rate, bits


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def write_wav(buffer: AudioBuffer, path, encoding: str = "float32"):
    """Write a mono buffer; pcm16/pcm24 clamp to [-1, 1) and round half away from zero."""
    if encoding not in ENCODINGS:
        raise MarkbenchError(f"unknown encoding {encoding!r}; choose from {ENCODINGS}")
    x = buffer.samples
    if encoding == "pcm16":
        q = np.clip(_round_half_away(x * 32768.0), -32768, 32767).astype("<i2")
        payload = q.tobytes()
        tag, bits = _WAVE_FORMAT_PCM, 16
    elif encoding == "pcm24":
        full = 1 << 23
        q = np.clip(_round_half_away(x * full), -full, full - 1).astype(np.int64)
        u = (q & 0xFFFFFF).astype(np.uint32)
        b = np.empty((u.size, 3), dtype=np.uint8)
        b[:, 0] = u & 0xFF
        b[:, 1] = (u >> 8) & 0xFF
        b[:, 2] = (u >> 16) & 0xFF
        payload = b.tobytes()
        tag, bits = _WAVE_FORMAT_PCM, 24
    else:
        payload = x.astype("<f4").tobytes()
        tag, bits = _WAVE_FORMAT_IEEE_FLOAT, 32

    rate = buffer.sample_rate
    block_align = bits // 8  # mono
    byte_rate = rate * block_align
    if tag == _WAVE_FORMAT_PCM:
        fmt_body = struct.pack("<HHIIHH", tag, 1, rate, byte_rate, block_align, bits)
        chunks = [(b"fmt ", fmt_body)]
    else:
        # non-PCM: fmt carries cbSize=0 and a fact chunk states the frame count
        fmt_body = struct.pack("<HHIIHHH", tag, 1, rate, byte_rate, block_align, bits, 0)
        chunks = [(b"fmt ", fmt_body), (b"fact", struct.pack("<I", len(buffer)))]
    chunks.append((b"data", payload))

    out = bytearray()
    for ck_id, body in chunks:
        out += ck_id
        out += struct.pack("<I", len(body))
        out += body
        if len(body) & 1:
            out += b"\x00"
    header = b"RIFF" + struct.pack("<I", 4 + len(out)) + b"WAVE"
    try:
        Path(path).write_bytes(header + out)
    except OSError as exc:
        raise MarkbenchError(f"cannot write {path}: {exc}") from exc
