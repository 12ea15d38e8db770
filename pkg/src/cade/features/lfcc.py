"""Linear-frequency cepstral coefficient front-end.

Pipeline per frame: Hamming window -> zero-padded power spectrum ->
linear triangular filterbank -> log energies -> orthonormal DCT-II ->
first `n_coeffs` coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray


@dataclass(frozen=True)
class Waveform:
    samples: Array
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("waveform must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if np.abs(samples).max() > 1.0:
            raise ValueError("waveform samples must lie in [-1, 1]")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")


@dataclass(frozen=True)
class LfccConfig:
    frame_len: int = 512
    hop: int = 256
    fft_size: int = 512
    n_filters: int = 20
    n_coeffs: int = 20
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.frame_len <= 0 or self.hop <= 0:
            raise ValueError("frame_len and hop must be positive")
        if self.hop > self.frame_len:
            raise ValueError("hop must not exceed frame_len")
        if self.fft_size < self.frame_len:
            raise ValueError("fft_size must be >= frame_len")
        if self.fft_size & (self.fft_size - 1) != 0:
            raise ValueError("fft_size must be a power of two")
        if self.n_filters <= 0:
            raise ValueError("n_filters must be positive")
        if not (1 <= self.n_coeffs <= self.n_filters):
            raise ValueError("n_coeffs must be in 1..n_filters")
        if self.log_floor <= 0.0:
            raise ValueError("log_floor must be positive")


@dataclass
class FeatureMap:
    """One utterance's frames x n_coeffs matrix plus provenance."""

    features: Array
    label: int          # 1 = bona fide, 0 = spoof
    task_id: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite entries")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


def hamming_window(n: int) -> Array:
    if n == 1:
        return np.ones(1)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))


def power_spectrum(frame: Array, fft_size: int) -> Array:
    """Magnitude-squared DFT of the Hamming-windowed, zero-padded frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or frame.size == 0:
        raise ValueError("power_spectrum: frame must be non-empty 1-D")
    if frame.size > fft_size:
        raise ValueError(f"power_spectrum: frame length {frame.size} exceeds "
                         f"fft_size {fft_size}")
    windowed = frame * hamming_window(frame.size)
    spec = np.fft.rfft(windowed, n=fft_size)
    return (spec.real ** 2 + spec.imag ** 2)


def linear_filterbank(n_filters: int, fft_size: int, sample_rate: int) -> Array:
    """Triangular unit-peak filters linearly spaced over 0..Nyquist.

    Returns [n_filters, fft_size // 2 + 1] weights evaluated at bin
    frequencies.
    """
    n_bins = fft_size // 2 + 1
    nyquist = sample_rate / 2.0
    edges = np.linspace(0.0, nyquist, n_filters + 2)
    bin_freqs = np.arange(n_bins) * sample_rate / fft_size
    bank = np.zeros((n_filters, n_bins))
    for i in range(n_filters):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        rise = (bin_freqs - lo) / (center - lo)
        fall = (hi - bin_freqs) / (hi - center)
        bank[i] = np.clip(np.minimum(rise, fall), 0.0, None)
    return bank


def dct_matrix(n: int) -> Array:
    """Orthonormal DCT-II: rows are the basis vectors, M @ M.T = I."""
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * m + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] /= np.sqrt(2.0)
    return mat


def frame_signal(samples: Array, frame_len: int, hop: int) -> Array:
    if samples.size < frame_len:
        raise ValueError(f"waveform too short: {samples.size} samples for "
                         f"frame_len {frame_len}")
    n_frames = 1 + (samples.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def lfcc(w: Waveform, cfg: LfccConfig, label: int = 0,
         task_id: int = 0) -> FeatureMap:
    """Featurize one waveform; the caller stamps label and task."""
    frames = frame_signal(w.samples, cfg.frame_len, cfg.hop)
    windowed = frames * hamming_window(cfg.frame_len)[None, :]
    spec = np.fft.rfft(windowed, n=cfg.fft_size, axis=1)
    power = spec.real ** 2 + spec.imag ** 2
    bank = linear_filterbank(cfg.n_filters, cfg.fft_size, w.sample_rate)
    energies = power @ bank.T
    logged = np.log(np.maximum(energies, cfg.log_floor))
    coeffs = logged @ dct_matrix(cfg.n_filters).T
    return FeatureMap(coeffs[:, :cfg.n_coeffs], label=label, task_id=task_id)
