from .lfcc import (
    Waveform,
    LfccConfig,
    FeatureMap,
    hamming_window,
    power_spectrum,
    linear_filterbank,
    dct_matrix,
    frame_signal,
    lfcc,
)
from .audio import (
    BONA_FIDE,
    SPOOF,
    ProtocolEntry,
    read_wav_pcm16,
    write_wav_pcm16,
    parse_protocol,
)
from .synth import (
    SpoofFamily,
    StreamConfig,
    Task,
    TaskStream,
    default_families,
    stream_fingerprint,
    synth_task_stream,
)
from .store import save_stream, load_stream, read_feature_map, write_feature_map

__all__ = [
    "Waveform", "LfccConfig", "FeatureMap",
    "hamming_window", "power_spectrum", "linear_filterbank", "dct_matrix",
    "frame_signal", "lfcc",
    "BONA_FIDE", "SPOOF", "ProtocolEntry",
    "read_wav_pcm16", "write_wav_pcm16", "parse_protocol",
    "SpoofFamily", "StreamConfig", "Task", "TaskStream",
    "default_families", "stream_fingerprint", "synth_task_stream",
    "save_stream", "load_stream", "read_feature_map", "write_feature_map",
]
