"""WAV ingestion: RIFF/WAVE parsing, record planning, streaming record reads,
and deterministic synthetic file generation.

Only integer PCM (16/24/32-bit, little-endian) is supported. Files are never
loaded whole: reads seek to the record's byte range, so memory per worker is
bounded by one record.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import (
    ChannelPolicyViolation,
    ClippingRequested,
    MalformedContainer,
    NonIntegerRecordLength,
    UnsupportedEncoding,
)

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

_SUPPORTED_BIT_DEPTHS = (16, 24, 32)


@dataclass(frozen=True)
class AudioFileMeta:
    """Decoded WAV header facts; immutable and shareable across workers."""

    path: str
    sample_rate_hz: int
    bit_depth: int
    channels: int
    total_samples: int  # per channel
    start_time: datetime
    byte_offset_to_data: int

    @property
    def bytes_per_frame(self) -> int:
        return self.channels * self.bit_depth // 8

    @property
    def duration_sec(self) -> float:
        return self.total_samples / self.sample_rate_hz


@dataclass(frozen=True)
class RecordPlan:
    """Fixed-size integration segments over one file; tail samples dropped."""

    record_size_samples: int
    record_count: int
    offsets: tuple[tuple[int, int], ...]  # (recordIndex, firstSampleIndex)
    dropped_tail_samples: int

    def record_duration_sec(self, sample_rate_hz: int) -> float:
        return self.record_size_samples / sample_rate_hz


@dataclass(frozen=True)
class SampleBuffer:
    """One record's worth of calibrated double-precision samples."""

    samples: np.ndarray  # float64, length = record_size_samples
    record_index: int
    timestamp: datetime


def parse_wav_header(raw: bytes | str | Path) -> AudioFileMeta:
    """Parse a RIFF/WAVE header and locate the PCM data without reading it.

    Accepts raw bytes or a path; with a path only the chunk headers are read.
    Raises MalformedContainer / UnsupportedEncoding; callers skip and log.
    """
    if isinstance(raw, (str, Path)):
        path = str(raw)
        with open(raw, "rb") as fh:
            return _parse_stream(fh, os.path.getsize(raw), path)
    import io

    return _parse_stream(io.BytesIO(raw), len(raw), "<bytes>")


def _parse_stream(fh, file_size: int, path: str) -> AudioFileMeta:
    header = fh.read(12)
    if len(header) < 12 or header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise MalformedContainer(f"{path}: not a RIFF/WAVE container")

    fmt = None
    data_offset = None
    data_size = None
    pos = 12
    while pos + 8 <= file_size:
        fh.seek(pos)
        chunk_header = fh.read(8)
        if len(chunk_header) < 8:
            break
        chunk_id, chunk_size = struct.unpack("<4sI", chunk_header)
        body = pos + 8
        if chunk_id == b"fmt ":
            fmt = fh.read(min(chunk_size, 16))
            if len(fmt) < 16:
                raise MalformedContainer(f"{path}: fmt chunk truncated")
        elif chunk_id == b"data":
            data_offset = body
            data_size = chunk_size
            if body + chunk_size > file_size:
                raise MalformedContainer(
                    f"{path}: data chunk claims {chunk_size} bytes, "
                    f"only {file_size - body} remain"
                )
        # chunks are word-aligned
        pos = body + chunk_size + (chunk_size & 1)

    if fmt is None:
        raise MalformedContainer(f"{path}: missing fmt chunk")
    if data_offset is None:
        raise MalformedContainer(f"{path}: missing data chunk")

    audio_format, channels, sample_rate, _, block_align, bits = struct.unpack(
        "<HHIIHH", fmt
    )
    if audio_format != 1:  # integer PCM only
        raise UnsupportedEncoding(f"{path}: audio format {audio_format} is not PCM")
    if bits not in _SUPPORTED_BIT_DEPTHS:
        raise UnsupportedEncoding(f"{path}: unsupported bit depth {bits}")
    if channels < 1:
        raise MalformedContainer(f"{path}: channel count {channels}")

    bytes_per_frame = channels * bits // 8
    if block_align not in (0, bytes_per_frame):
        raise MalformedContainer(
            f"{path}: block align {block_align} != {bytes_per_frame}"
        )
    if data_size % bytes_per_frame != 0:
        raise MalformedContainer(
            f"{path}: data size {data_size} not a whole number of frames"
        )

    return AudioFileMeta(
        path=path,
        sample_rate_hz=sample_rate,
        bit_depth=bits,
        channels=channels,
        total_samples=data_size // bytes_per_frame,
        start_time=EPOCH,
        byte_offset_to_data=data_offset,
    )


def parse_start_time(
    filename: str, pattern: str | None, fallback_index: int = 0
) -> datetime:
    """Extract a UTC start timestamp from a filename.

    `pattern` is a strptime format matched against digit runs in the stem
    (e.g. "%Y%m%d_%H%M%S"). Without a pattern, or when nothing matches, the
    fallback is epoch 0 offset by the file's position in the corpus so
    ordering stays stable.
    """
    if pattern:
        stem = Path(filename).stem
        # try every suffix of the stem against the pattern
        for start in range(len(stem)):
            try:
                ts = datetime.strptime(stem[start:], pattern)
                return ts.replace(tzinfo=timezone.utc)
            except ValueError:
                continue
    return EPOCH + timedelta(seconds=fallback_index)


def with_start_time(meta: AudioFileMeta, start_time: datetime) -> AudioFileMeta:
    return replace(meta, start_time=start_time)


def plan_records(meta: AudioFileMeta, record_size_sec: float) -> RecordPlan:
    """Plan contiguous non-overlapping records; the incomplete tail is dropped
    (padding would bias averaged features)."""
    if record_size_sec <= 0:
        raise NonIntegerRecordLength(f"record size {record_size_sec} s not positive")
    exact = record_size_sec * meta.sample_rate_hz
    record_size_samples = round(exact)
    if record_size_samples < 1 or abs(exact - record_size_samples) > 1e-9:
        raise NonIntegerRecordLength(
            f"{record_size_sec} s x {meta.sample_rate_hz} Hz = {exact} samples "
            "is not integral"
        )
    record_count = meta.total_samples // record_size_samples
    offsets = tuple((i, i * record_size_samples) for i in range(record_count))
    return RecordPlan(
        record_size_samples=record_size_samples,
        record_count=record_count,
        offsets=offsets,
        dropped_tail_samples=meta.total_samples - record_count * record_size_samples,
    )


def _decode_pcm(buf: bytes, bit_depth: int) -> np.ndarray:
    if bit_depth == 16:
        ints = np.frombuffer(buf, dtype="<i2").astype(np.int32)
    elif bit_depth == 32:
        ints = np.frombuffer(buf, dtype="<i4").astype(np.int64)
    else:  # 24-bit: assemble from byte triplets, then sign-extend
        b = np.frombuffer(buf, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        ints = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        ints = (ints ^ 0x800000) - 0x800000
    return ints


def read_record(
    meta: AudioFileMeta,
    plan: RecordPlan,
    record_index: int,
    channel_policy: str = "first",
) -> SampleBuffer:
    """Read one record as float64 in [-1, 1).

    Integer PCM is normalized by 2^(bitDepth-1). Each call opens its own file
    handle, so concurrent reads on the same file are safe.
    """
    if not 0 <= record_index < plan.record_count:
        raise IndexError(
            f"record {record_index} out of range [0, {plan.record_count})"
        )
    if channel_policy not in ("first", "error"):
        raise ValueError(f"unknown channel policy {channel_policy!r}")
    if channel_policy == "error" and meta.channels != 1:
        raise ChannelPolicyViolation(
            f"{meta.path}: {meta.channels} channels with policy 'error'"
        )

    first_sample = record_index * plan.record_size_samples
    frame_bytes = meta.bytes_per_frame
    n_bytes = plan.record_size_samples * frame_bytes
    with open(meta.path, "rb") as fh:
        fh.seek(meta.byte_offset_to_data + first_sample * frame_bytes)
        buf = fh.read(n_bytes)
    if len(buf) != n_bytes:
        raise IOError(f"{meta.path}: short read at record {record_index}")

    ints = _decode_pcm(buf, meta.bit_depth)
    if meta.channels > 1:
        ints = ints[:: meta.channels]  # channel 0 only
    samples = ints.astype(np.float64) / float(2 ** (meta.bit_depth - 1))
    if not np.all(np.isfinite(samples)):
        raise IOError(f"{meta.path}: non-finite samples after decode")

    record_sec = plan.record_size_samples / meta.sample_rate_hz
    timestamp = meta.start_time + timedelta(seconds=record_index * record_sec)
    return SampleBuffer(samples=samples, record_index=record_index, timestamp=timestamp)


# ---------------------------------------------------------------------------
# Synthetic WAV generation (desk-scale stand-in workloads)

@dataclass(frozen=True)
class Silence:
    pass


@dataclass(frozen=True)
class Sine:
    freq_hz: float
    amplitude: float = 0.5


@dataclass(frozen=True)
class WhiteNoise:
    variance: float = 0.01
    seed: int = 0


SignalSpec = Silence | Sine | WhiteNoise


def _render(signal: SignalSpec, n: int, sample_rate_hz: int) -> np.ndarray:
    if isinstance(signal, Silence):
        return np.zeros(n)
    if isinstance(signal, Sine):
        if signal.amplitude > 1.0:
            raise ClippingRequested(f"amplitude {signal.amplitude} > 1")
        t = np.arange(n, dtype=np.float64) / sample_rate_hz
        return signal.amplitude * np.sin(2.0 * np.pi * signal.freq_hz * t)
    if isinstance(signal, WhiteNoise):
        rng = np.random.default_rng(signal.seed)
        x = rng.normal(0.0, np.sqrt(signal.variance), size=n)
        return np.clip(x, -1.0, 1.0 - 2.0 ** -15)
    raise TypeError(f"unknown signal spec {signal!r}")


def generate_synthetic_wav(
    path: str | Path,
    duration_sec: float,
    sample_rate_hz: int,
    signal: SignalSpec,
    chunk_samples: int = 1 << 20,
) -> Path:
    """Write a deterministic 16-bit mono PCM WAV.

    Output round-trips through parse_wav_header/read_record bit-exactly; for a
    fixed seed the bytes are identical run to run.
    """
    exact = duration_sec * sample_rate_hz
    n = round(exact)
    if abs(exact - n) > 1e-9:
        raise NonIntegerRecordLength(
            f"{duration_sec} s x {sample_rate_hz} Hz is not an integral sample count"
        )
    path = Path(path)
    data_bytes = 2 * n
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 36 + data_bytes) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate_hz,
                                       sample_rate_hz * 2, 2, 16))
        fh.write(b"data" + struct.pack("<I", data_bytes))
        # noise must be rendered in one pass so the RNG stream is stable
        if isinstance(signal, WhiteNoise) or n <= chunk_samples:
            x = _render(signal, n, sample_rate_hz)
            fh.write(_quantize16(x).tobytes())
        else:
            written = 0
            while written < n:
                m = min(chunk_samples, n - written)
                if isinstance(signal, Silence):
                    x = np.zeros(m)
                else:  # Sine: render with absolute sample index for continuity
                    t = (np.arange(written, written + m, dtype=np.float64)
                         / sample_rate_hz)
                    x = signal.amplitude * np.sin(2.0 * np.pi * signal.freq_hz * t)
                fh.write(_quantize16(x).tobytes())
                written += m
    return path


def _quantize16(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
