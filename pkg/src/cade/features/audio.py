"""WAV (PCM16 mono) reading/writing and anti-spoofing protocol files."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .lfcc import Waveform

BONA_FIDE = 1
SPOOF = 0


def read_wav_pcm16(data: bytes) -> Waveform:
    """Decode a RIFF/WAVE, PCM format 1, 16-bit, mono byte string.

    Samples are scaled by 1/32768 into [-1, 1).
    """
    if len(data) < 12 or data[0:4] != b"RIFF":
        raise ValueError("wav: missing RIFF header")
    if data[8:12] != b"WAVE":
        raise ValueError("wav: missing WAVE form type")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_len,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_len]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise ValueError("wav: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_len:
                raise ValueError("wav: data chunk length exceeds file size")
            payload = body
        pos += 8 + chunk_len + (chunk_len & 1)   # chunks are word-aligned

    if fmt is None:
        raise ValueError("wav: missing fmt chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise ValueError(f"wav: unsupported format code {audio_format} (need PCM=1)")
    if channels != 1:
        raise ValueError(f"wav: unsupported channels {channels} (need mono)")
    if bits != 16:
        raise ValueError(f"wav: unsupported bit depth {bits} (need 16)")
    if payload is None:
        raise ValueError("wav: missing data chunk")
    if len(payload) % 2 != 0:
        raise ValueError("wav: odd data chunk length for 16-bit samples")

    ints = np.frombuffer(payload, dtype="<i2").astype(np.float64)
    if ints.size == 0:
        raise ValueError("wav: empty data chunk")
    return Waveform(ints / 32768.0, sample_rate)


def write_wav_pcm16(w: Waveform) -> bytes:
    """Encode a waveform as PCM16 mono; exact inverse of read for k/32768 samples."""
    ints = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    byte_rate = w.sample_rate * 2
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, w.sample_rate, byte_rate, 2, 16,
        b"data", len(payload),
    )
    return header + payload


@dataclass(frozen=True)
class ProtocolEntry:
    speaker_id: str
    utt_id: str
    attack_id: str
    label: int          # 1 = bona fide, 0 = spoof


def parse_protocol(text: str) -> list[ProtocolEntry]:
    """Parse a 5-column protocol file: speaker utt - attack key."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ValueError(f"protocol line {lineno}: expected 5 fields, "
                             f"got {len(fields)}")
        speaker, utt, _, attack, key = fields
        if key == "bonafide":
            label = BONA_FIDE
        elif key == "spoof":
            label = SPOOF
        else:
            raise ValueError(f"protocol line {lineno}: unknown key {key!r}")
        entries.append(ProtocolEntry(speaker, utt, attack, label))
    return entries
