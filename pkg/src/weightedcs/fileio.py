"""WAV (PCM16 mono) and raw 8-bit planar frame files."""
from __future__ import annotations

import struct
import wave
from pathlib import Path

import numpy as np

from .errors import FormatError

__all__ = ["read_wav", "write_wav", "read_raw_frames", "write_raw_frames"]


def _chunks(data: bytes):
    """Yield ``(chunk_id, payload_offset, size)`` for the RIFF body."""
    if len(data) < 12:
        raise FormatError("file too short for a RIFF header", offset=len(data))
    if data[:4] != b"RIFF":
        raise FormatError("missing RIFF signature", offset=0)
    if data[8:12] != b"WAVE":
        raise FormatError("RIFF form type is not WAVE", offset=8)
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        if pos + 8 + size > len(data):
            raise FormatError(f"chunk {cid!r} runs past end of file", offset=pos)
        yield cid, pos + 8, size
        pos += 8 + size + (size & 1)


def read_wav(path):
    """Read a 16-bit PCM mono WAV file.

    Returns ``(samples, sample_rate)`` with samples scaled by ``1/32768``.
    """
    from .streaming import AudioStream

    data = Path(path).read_bytes()
    fmt = None
    pcm = None
    for cid, off, size in _chunks(data):
        if cid == b"fmt ":
            if size < 16:
                raise FormatError("fmt chunk shorter than 16 bytes", offset=off)
            tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, off)
            if tag != 1:
                raise FormatError(f"unsupported format tag {tag} (need PCM = 1)", offset=off)
            if channels != 1:
                raise FormatError(f"expected mono audio, found {channels} channels", offset=off + 2)
            if bits != 16:
                raise FormatError(f"expected 16-bit samples, found {bits}", offset=off + 14)
            if rate == 0:
                raise FormatError("sample rate is zero", offset=off + 4)
            fmt = rate
        elif cid == b"data":
            if fmt is None:
                raise FormatError("data chunk precedes fmt chunk", offset=off - 8)
            if size % 2:
                raise FormatError("odd byte count in 16-bit data chunk", offset=off - 4)
            pcm = np.frombuffer(data, dtype="<i2", count=size // 2, offset=off)
    if fmt is None:
        raise FormatError("no fmt chunk found", offset=12)
    if pcm is None:
        raise FormatError("no data chunk found", offset=len(data))
    return AudioStream(pcm.astype(float) / 32768.0, fmt)


def write_wav(stream, path) -> None:
    """Write samples in [-1, 1) as 16-bit PCM mono, rounding to the grid."""
    q = np.clip(np.round(np.asarray(stream.samples) * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(stream.sample_rate))
        fh.writeframes(q.tobytes())


def read_raw_frames(path, H: int, W: int, count: int):
    """Read ``count`` planar 8-bit ``H x W`` frames stored back to back."""
    from .streaming import FrameSequence

    need = H * W * count
    data = Path(path).read_bytes()
    if len(data) < need:
        raise FormatError(f"need {need} bytes for {count} frames of {H}x{W}, file has {len(data)}",
                          offset=len(data))
    arr = np.frombuffer(data, dtype=np.uint8, count=need).reshape(count, H, W)
    return FrameSequence(arr.copy())


def write_raw_frames(seq, path) -> None:
    np.ascontiguousarray(seq.frames, dtype=np.uint8).tofile(str(path))
