import struct

import numpy as np
import pytest

from cade.features import (
    Waveform,
    parse_protocol,
    read_wav_pcm16,
    write_wav_pcm16,
)


def make_wav(samples_i16, sample_rate=16000, channels=1, bits=16, fmt=1):
    payload = np.asarray(samples_i16, dtype="<i2").tobytes()
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, fmt, channels, sample_rate,
        sample_rate * channels * bits // 8, channels * bits // 8, bits,
        b"data", len(payload),
    ) + payload


class TestWav:
    def test_scaling(self):
        w = read_wav_pcm16(make_wav([0, 16384, -32768]))
        assert w.samples.tolist() == [0.0, 0.5, -1.0]
        assert w.sample_rate == 16000

    def test_round_trip_exact(self):
        rng = np.random.default_rng(3)
        ints = rng.integers(-32768, 32768, size=200, dtype=np.int16)
        data = make_wav(ints, sample_rate=8000)
        w = read_wav_pcm16(data)
        again = read_wav_pcm16(write_wav_pcm16(w))
        assert np.array_equal(w.samples, again.samples)
        assert again.sample_rate == 8000

    def test_truncated_data_chunk(self):
        data = make_wav([1, 2, 3, 4])
        with pytest.raises(ValueError, match="data chunk length"):
            read_wav_pcm16(data[:-3])

    def test_stereo_rejected(self):
        with pytest.raises(ValueError, match="channels"):
            read_wav_pcm16(make_wav([1, 2, 3, 4], channels=2))

    def test_wrong_format_code(self):
        with pytest.raises(ValueError, match="format code"):
            read_wav_pcm16(make_wav([1, 2], fmt=3))

    def test_wrong_bit_depth(self):
        with pytest.raises(ValueError, match="bit depth"):
            read_wav_pcm16(make_wav([1, 2], bits=8))

    def test_not_riff(self):
        with pytest.raises(ValueError, match="RIFF"):
            read_wav_pcm16(b"OGGS" + bytes(40))


class TestProtocol:
    def test_spoof_line(self):
        (e,) = parse_protocol("LA_0001 LA_T_100 - A01 spoof")
        assert e.speaker_id == "LA_0001"
        assert e.utt_id == "LA_T_100"
        assert e.attack_id == "A01"
        assert e.label == 0

    def test_bonafide_line(self):
        (e,) = parse_protocol("LA_0002 LA_T_200 - - bonafide")
        assert e.label == 1
        assert e.attack_id == "-"

    def test_wrong_field_count(self):
        text = "LA_0001 LA_T_100 - A01 spoof\nLA_0002 LA_T_200 bonafide"
        with pytest.raises(ValueError, match="line 2"):
            parse_protocol(text)

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="line 1.*genuine"):
            parse_protocol("a b - - genuine")

    def test_blank_lines_skipped(self):
        entries = parse_protocol("\nA B - - bonafide\n\nC D - A02 spoof\n")
        assert [e.label for e in entries] == [1, 0]
