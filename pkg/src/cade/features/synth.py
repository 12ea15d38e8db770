"""Synthetic spoof-family task streams.

Bona fide clips come from one fixed harmonic-complex process whose
parameters never change across tasks. Each task's spoof class is that
same process pushed through the task's family distortions (additive
tones, band-limited noise, amplitude modulation, mixing gain), so
successive tasks present genuinely different spoof evidence while the
genuine class stays stable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .lfcc import FeatureMap, LfccConfig, Waveform, lfcc

Array = np.ndarray


@dataclass(frozen=True)
class SpoofFamily:
    """One distortion recipe applied on top of the bona fide process."""

    name: str
    tone_freqs: tuple[float, ...] = ()
    tone_gain: float = 0.0
    noise_band: tuple[float, float] | None = None
    noise_gain: float = 0.0
    am_rate: float = 0.0         # Hz; 0 disables amplitude modulation
    am_depth: float = 0.0        # 0..1
    mix_gain: float = 1.0

    def validate(self, sample_rate: int) -> None:
        nyq = sample_rate / 2.0
        for f in self.tone_freqs:
            if not 0.0 < f < nyq:
                raise ValueError(f"family {self.name}: tone {f} Hz outside (0, Nyquist)")
        if self.tone_gain < 0.0 or self.noise_gain < 0.0:
            raise ValueError(f"family {self.name}: gains must be non-negative")
        if self.noise_band is not None:
            lo, hi = self.noise_band
            if not (0.0 <= lo < hi <= nyq):
                raise ValueError(f"family {self.name}: bad noise band {self.noise_band}")
        if not 0.0 <= self.am_depth <= 1.0:
            raise ValueError(f"family {self.name}: am_depth must be in [0, 1]")
        if self.am_rate < 0.0:
            raise ValueError(f"family {self.name}: am_rate must be non-negative")
        if not 0.0 < self.mix_gain <= 2.0:
            raise ValueError(f"family {self.name}: mix_gain must be in (0, 2]")


def default_families() -> tuple[tuple[SpoofFamily, ...], ...]:
    """Three tasks, two families each, with disjoint spectral fingerprints.

    Gains sit just above the detection floor so that a model trained on
    one task genuinely forgets the others; louder artifacts make every
    method score near zero and the stream stops discriminating.
    """
    return (
        (SpoofFamily("tone3k", tone_freqs=(3000.0, 3400.0), tone_gain=0.035),
         SpoofFamily("band2k", noise_band=(2000.0, 2600.0), noise_gain=0.021)),
        (SpoofFamily("tone5k", tone_freqs=(5200.0, 5800.0), tone_gain=0.035),
         SpoofFamily("band4k", noise_band=(4300.0, 4900.0), noise_gain=0.021)),
        (SpoofFamily("am40", am_rate=40.0, am_depth=0.28),
         SpoofFamily("band6k", noise_band=(6300.0, 6900.0), noise_gain=0.021,
                     am_rate=25.0, am_depth=0.105)),
    )


@dataclass(frozen=True)
class StreamConfig:
    sample_rate: int = 16000
    clip_samples: int = 8448      # 32 frames at the default LFCC settings
    train_per_task: int = 400
    eval_per_task: int = 100
    tasks: tuple[tuple[SpoofFamily, ...], ...] = field(default_factory=default_families)
    lfcc: LfccConfig = field(default_factory=LfccConfig)

    def __post_init__(self):
        if self.sample_rate <= 0 or self.clip_samples <= 0:
            raise ValueError("sample_rate and clip_samples must be positive")
        if self.train_per_task < 2 or self.eval_per_task < 2:
            raise ValueError("need at least 2 train and 2 eval clips per task")
        if len(self.tasks) < 1:
            raise ValueError("need at least one task")
        for families in self.tasks:
            if len(families) < 1:
                raise ValueError("every task needs at least one spoof family")
            for fam in families:
                fam.validate(self.sample_rate)


@dataclass
class Task:
    task_id: int
    train: list[FeatureMap]
    eval: list[FeatureMap]


@dataclass
class TaskStream:
    tasks: list[Task]
    fingerprint: str
    config: StreamConfig | None = None


def stream_fingerprint(cfg: StreamConfig, seed: int) -> str:
    blob = json.dumps({"config": asdict(cfg), "seed": seed}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _bona_fide_clip(rng: np.random.Generator, cfg: StreamConfig) -> Array:
    """Harmonic complex with jittered fundamental plus a small noise floor."""
    n = cfg.clip_samples
    t = np.arange(n) / cfg.sample_rate
    f0 = rng.uniform(110.0, 180.0)
    clip = np.zeros(n)
    for k in range(1, 6):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        clip += np.sin(2.0 * np.pi * k * f0 * t + phase) / k
    clip += 0.02 * rng.standard_normal(n)
    ramp = min(256, n // 4)
    env = np.ones(n)
    env[:ramp] = np.linspace(0.0, 1.0, ramp)
    env[-ramp:] = np.linspace(1.0, 0.0, ramp)
    clip *= env
    peak = np.abs(clip).max()
    return 0.5 * clip / peak if peak > 0 else clip


def _band_noise(rng: np.random.Generator, cfg: StreamConfig,
                band: tuple[float, float]) -> Array:
    """Unit-RMS Gaussian noise confined to a frequency band via FFT masking."""
    n = cfg.clip_samples
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / cfg.sample_rate)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0.0
    shaped = np.fft.irfft(spec, n=n)
    rms = np.sqrt((shaped ** 2).mean())
    return shaped / rms if rms > 0 else shaped


def _spoof_clip(rng: np.random.Generator, cfg: StreamConfig,
                fam: SpoofFamily) -> Array:
    clip = _bona_fide_clip(rng, cfg)
    t = np.arange(cfg.clip_samples) / cfg.sample_rate
    if fam.am_rate > 0.0 and fam.am_depth > 0.0:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        envelope = 1.0 + fam.am_depth * np.sin(2.0 * np.pi * fam.am_rate * t + phase)
        clip = clip * envelope / (1.0 + fam.am_depth)
    for f in fam.tone_freqs:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        clip = clip + fam.tone_gain * np.sin(2.0 * np.pi * f * t + phase)
    if fam.noise_band is not None:
        clip = clip + fam.noise_gain * _band_noise(rng, cfg, fam.noise_band)
    clip = clip * fam.mix_gain
    return np.clip(clip, -1.0, 1.0)


def _featurize(clip: Array, cfg: StreamConfig, label: int, task_id: int) -> FeatureMap:
    return lfcc(Waveform(clip, cfg.sample_rate), cfg.lfcc, label=label,
                task_id=task_id)


def _render_split(rng: np.random.Generator, cfg: StreamConfig, count: int,
                  families: tuple[SpoofFamily, ...], task_id: int) -> list[FeatureMap]:
    n_bona = count // 2
    maps = []
    for _ in range(n_bona):
        maps.append(_featurize(_bona_fide_clip(rng, cfg), cfg, 1, task_id))
    for i in range(count - n_bona):
        fam = families[i % len(families)]
        maps.append(_featurize(_spoof_clip(rng, cfg, fam), cfg, 0, task_id))
    return maps


def synth_task_stream(cfg: StreamConfig, seed: int) -> TaskStream:
    """Render and featurize the full stream; pure in (cfg, seed).

    Features are standardized per coefficient using the first task's
    train split, the only statistics a sequential learner has seen when
    training begins.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    tasks = []
    for idx, families in enumerate(cfg.tasks):
        task_id = idx + 1
        train = _render_split(rng, cfg, cfg.train_per_task, families, task_id)
        evals = _render_split(rng, cfg, cfg.eval_per_task, families, task_id)
        tasks.append(Task(task_id, train, evals))

    first = np.concatenate([m.features for m in tasks[0].train], axis=0)
    mean = first.mean(axis=0)
    std = first.std(axis=0)
    std[std < 1e-12] = 1.0
    for task in tasks:
        for m in task.train + task.eval:
            m.features = (m.features - mean) / std

    return TaskStream(tasks, stream_fingerprint(cfg, seed), cfg)
