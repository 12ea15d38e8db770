"""Experiment configuration: a strict YAML schema.

Every key is checked against the schema with a nearest-key suggestion on
typos, because a silently ignored knob is the main way a sweep burns a
night of compute.  Parsing materializes all defaults, so serialize ->
parse is the identity on parsed configs.
"""

from __future__ import annotations

import difflib
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..autodiff import OptimizerConfig
from ..continual import STRATEGIES, BufferConfig, LossWeights, MethodSpec
from ..continual.methods import METHODS
from ..features import LfccConfig, SpoofFamily, StreamConfig, default_families
from ..model import ModelConfig, default_config
from ..train import RunConfig


class ConfigError(Exception):
    """Invalid experiment config; the CLI maps this to exit code 2."""


def _unknown(key: str, valid, path: str) -> ConfigError:
    loc = f"{path}.{key}" if path else key
    near = difflib.get_close_matches(key, list(valid), n=1)
    hint = f" (did you mean {near[0]!r}?)" if near else ""
    return ConfigError(f"unknown config key {loc!r}{hint}")


def _check_keys(d: dict, valid, path: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, "
                          f"got {type(d).__name__}")
    for key in d:
        if key not in valid:
            raise _unknown(str(key), valid, path)


def _int(d: dict, key: str, default: int, path: str, lo=None) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}: must be >= {lo}, got {v}")
    return v


def _float(d: dict, key: str, default: float, path: str) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _str(d: dict, key: str, default: str, path: str, choices=None) -> str:
    v = d.get(key, default)
    if not isinstance(v, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {v!r}")
    if choices is not None and v not in choices:
        near = difflib.get_close_matches(v, list(choices), n=1)
        hint = f" (did you mean {near[0]!r}?)" if near else ""
        raise ConfigError(f"{path}.{key}: unknown value {v!r}{hint}")
    return v


def _bool(d: dict, key: str, default: bool, path: str) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected true/false, got {v!r}")
    return v


def _int_list(d: dict, key: str, default: list[int], path: str,
              lo=None) -> list[int]:
    v = d.get(key)
    if v is None:
        return list(default)
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{path}.{key}: expected a non-empty list")
    out = []
    for i, item in enumerate(v):
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"{path}.{key}[{i}]: expected an integer, "
                              f"got {item!r}")
        if lo is not None and item < lo:
            raise ConfigError(f"{path}.{key}[{i}]: must be >= {lo}")
        out.append(item)
    return out


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

_FAMILY_KEYS = ("name", "tone_freqs", "tone_gain", "noise_band",
                "noise_gain", "am_rate", "am_depth", "mix_gain")


def _parse_family(d: dict, path: str) -> SpoofFamily:
    _check_keys(d, _FAMILY_KEYS, path)
    if "name" not in d:
        raise ConfigError(f"{path}.name: every spoof family needs a name")
    def pair(key):
        v = d.get(key)
        if v is None:
            return None
        if not isinstance(v, list) or len(v) != 2:
            raise ConfigError(f"{path}.{key}: expected [low, high]")
        return (float(v[0]), float(v[1]))
    tones = d.get("tone_freqs", [])
    if not isinstance(tones, list):
        raise ConfigError(f"{path}.tone_freqs: expected a list")
    try:
        return SpoofFamily(
            name=_str(d, "name", "", path),
            tone_freqs=tuple(float(f) for f in tones),
            tone_gain=_float(d, "tone_gain", 0.0, path),
            noise_band=pair("noise_band"),
            noise_gain=_float(d, "noise_gain", 0.0, path),
            am_rate=_float(d, "am_rate", 0.0, path),
            am_depth=_float(d, "am_depth", 0.0, path),
            mix_gain=_float(d, "mix_gain", 1.0, path),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


def _family_dict(fam: SpoofFamily) -> dict:
    return {
        "name": fam.name,
        "tone_freqs": [float(f) for f in fam.tone_freqs],
        "tone_gain": fam.tone_gain,
        "noise_band": (list(fam.noise_band)
                       if fam.noise_band is not None else None),
        "noise_gain": fam.noise_gain,
        "am_rate": fam.am_rate,
        "am_depth": fam.am_depth,
        "mix_gain": fam.mix_gain,
    }


_LFCC_KEYS = ("frame_len", "hop", "fft_size", "n_filters", "n_coeffs",
              "log_floor")


def _parse_lfcc(d: dict, path: str) -> LfccConfig:
    _check_keys(d, _LFCC_KEYS, path)
    base = LfccConfig()
    try:
        return LfccConfig(
            frame_len=_int(d, "frame_len", base.frame_len, path, lo=1),
            hop=_int(d, "hop", base.hop, path, lo=1),
            fft_size=_int(d, "fft_size", base.fft_size, path, lo=1),
            n_filters=_int(d, "n_filters", base.n_filters, path, lo=1),
            n_coeffs=_int(d, "n_coeffs", base.n_coeffs, path, lo=1),
            log_floor=_float(d, "log_floor", base.log_floor, path),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


_STREAM_KEYS = ("seed", "sample_rate", "clip_samples", "train_per_task",
                "eval_per_task", "tasks", "lfcc")


def _parse_stream(d: dict, path: str) -> tuple[StreamConfig, int]:
    _check_keys(d, _STREAM_KEYS, path)
    seed = _int(d, "seed", 7, path, lo=0)
    tasks_raw = d.get("tasks")
    if tasks_raw is None:
        tasks = default_families()
    else:
        if not isinstance(tasks_raw, list) or not tasks_raw:
            raise ConfigError(f"{path}.tasks: expected a non-empty list of "
                              "family lists")
        tasks = []
        for i, fams in enumerate(tasks_raw):
            if not isinstance(fams, list) or not fams:
                raise ConfigError(f"{path}.tasks[{i}]: expected a non-empty "
                                  "list of families")
            tasks.append(tuple(_parse_family(f, f"{path}.tasks[{i}][{j}]")
                               for j, f in enumerate(fams)))
        tasks = tuple(tasks)
    base = StreamConfig()
    try:
        cfg = StreamConfig(
            sample_rate=_int(d, "sample_rate", base.sample_rate, path, lo=1),
            clip_samples=_int(d, "clip_samples", base.clip_samples, path,
                              lo=1),
            train_per_task=_int(d, "train_per_task", base.train_per_task,
                                path, lo=2),
            eval_per_task=_int(d, "eval_per_task", base.eval_per_task, path,
                               lo=2),
            tasks=tasks,
            lfcc=_parse_lfcc(d.get("lfcc", {}), f"{path}.lfcc"),
        )
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    return cfg, seed


def _stream_dict(cfg: StreamConfig, seed: int) -> dict:
    return {
        "seed": seed,
        "sample_rate": cfg.sample_rate,
        "clip_samples": cfg.clip_samples,
        "train_per_task": cfg.train_per_task,
        "eval_per_task": cfg.eval_per_task,
        "tasks": [[_family_dict(f) for f in fams] for fams in cfg.tasks],
        "lfcc": {k: getattr(cfg.lfcc, k) for k in _LFCC_KEYS},
    }


_METHOD_KEYS = ("name", "alpha", "beta", "gamma", "lam", "with_memory")

# methods that always train with a replay buffer
_BUFFERED = ("replay", "cade")
# methods that may optionally add one (the published memory-size grid
# runs ewc and dfwf with replay memory attached)
_OPTIONAL_BUFFER = ("ewc", "mas", "lwf", "dfwf")


@dataclass(frozen=True)
class MethodEntry:
    name: str
    alpha: float
    beta: float
    gamma: float
    lam: float
    with_memory: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "lam": self.lam,
                "with_memory": self.with_memory}


def _parse_method(d, path: str) -> MethodEntry:
    if isinstance(d, str):
        d = {"name": d}
    _check_keys(d, _METHOD_KEYS, path)
    name = _str(d, "name", "", path, choices=METHODS)
    w = LossWeights()
    with_memory = _bool(d, "with_memory", name in _BUFFERED, path)
    if with_memory and name not in _BUFFERED + _OPTIONAL_BUFFER:
        raise ConfigError(f"{path}: method {name!r} never takes memory")
    if not with_memory and name in _BUFFERED:
        raise ConfigError(f"{path}: method {name!r} always takes memory")
    return MethodEntry(
        name=name,
        alpha=_float(d, "alpha", w.alpha, path),
        beta=_float(d, "beta", w.beta, path),
        gamma=_float(d, "gamma", w.gamma, path),
        lam=_float(d, "lam", 100.0, path),
        with_memory=with_memory,
    )


_TRAIN_KEYS = ("epochs", "batch_size", "optimizer", "lr", "momentum",
               "fisher_samples", "replay_fraction")


@dataclass(frozen=True)
class TrainSection:
    epochs: int
    batch_size: int
    optimizer: str
    lr: float
    momentum: float
    fisher_samples: int
    replay_fraction: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in _TRAIN_KEYS}


def _parse_train(d: dict, path: str) -> TrainSection:
    _check_keys(d, _TRAIN_KEYS, path)
    return TrainSection(
        epochs=_int(d, "epochs", 6, path, lo=1),
        batch_size=_int(d, "batch_size", 32, path, lo=1),
        optimizer=_str(d, "optimizer", "sgd", path, choices=("sgd", "adam")),
        lr=_float(d, "lr", 0.01, path),
        momentum=_float(d, "momentum", 0.9, path),
        fisher_samples=_int(d, "fisher_samples", 200, path, lo=1),
        replay_fraction=_float(d, "replay_fraction", 0.25, path),
    )


_MODEL_KEYS = ("conv_blocks", "activation", "tap_blocks", "tap_dense",
               "gradcam_layer", "dense_width", "n_classes", "input_shape")


def _parse_model(d: dict, path: str) -> ModelConfig:
    _check_keys(d, _MODEL_KEYS, path)
    full = default_config().to_dict()
    full.update(d)
    try:
        return ModelConfig.from_dict(full)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{path}: {e}") from e


_TOP_KEYS = ("out", "stream", "data", "methods", "memory", "strategy",
             "seeds", "train", "model")

_DEFAULT_METHODS = ("joint", "finetune", "ewc", "lwf", "mas", "replay",
                    "dfwf", "cade")


@dataclass(frozen=True)
class ExperimentConfig:
    out: str
    stream: StreamConfig
    stream_seed: int
    data: str | None
    methods: tuple[MethodEntry, ...]
    memory: tuple[int, ...]
    strategy: str
    seeds: tuple[int, ...]
    train: TrainSection
    model: ModelConfig


def parse_config(raw: dict | None, base_dir: Path | None = None
                 ) -> ExperimentConfig:
    raw = {} if raw is None else raw
    _check_keys(raw, _TOP_KEYS, "")
    stream, stream_seed = _parse_stream(raw.get("stream", {}), "stream")
    data = raw.get("data")
    if data is not None:
        if not isinstance(data, str):
            raise ConfigError(f"data: expected a path string, got {data!r}")
        p = Path(data)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        if not (p / "manifest.json").exists():
            raise ConfigError(f"data: no manifest.json under {p}")
        data = str(p)
    methods_raw = raw.get("methods", list(_DEFAULT_METHODS))
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("methods: expected a non-empty list")
    methods = tuple(_parse_method(m, f"methods[{i}]")
                    for i, m in enumerate(methods_raw))
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError("methods: duplicate method names")
    return ExperimentConfig(
        out=_str(raw, "out", "runs", ""),
        stream=stream,
        stream_seed=stream_seed,
        data=data,
        methods=methods,
        memory=tuple(_int_list(raw, "memory", [500], "", lo=1)),
        strategy=_str(raw, "strategy", "fixed-random", "",
                      choices=STRATEGIES),
        seeds=tuple(_int_list(raw, "seeds", [1, 2, 3, 4, 5], "")),
        train=_parse_train(raw.get("train", {}), "train"),
        model=_parse_model(raw.get("model", {}), "model"),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: {e}") from e
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return parse_config(raw, base_dir=p.parent)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical form with every default materialized."""
    return {
        "out": cfg.out,
        "stream": _stream_dict(cfg.stream, cfg.stream_seed),
        "data": cfg.data,
        "methods": [m.to_dict() for m in cfg.methods],
        "memory": list(cfg.memory),
        "strategy": cfg.strategy,
        "seeds": list(cfg.seeds),
        "train": cfg.train.to_dict(),
        "model": cfg.model.to_dict(),
    }


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# ---------------------------------------------------------------------------
# run cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunCell:
    method: MethodEntry
    memory: int            # 0 = no replay buffer
    seed: int

    def label(self) -> str:
        return f"{self.method.name}/mem{self.memory}/seed{self.seed}"


def expand_cells(cfg: ExperimentConfig, seed_offset: int = 0
                 ) -> list[RunCell]:
    cells = []
    for entry in cfg.methods:
        mems = list(cfg.memory) if entry.with_memory else [0]
        for mem in mems:
            for seed in cfg.seeds:
                cells.append(RunCell(entry, mem, seed + seed_offset))
    return cells


def make_run_config(cfg: ExperimentConfig, cell: RunCell) -> RunConfig:
    entry = cell.method
    buffer = (BufferConfig(cell.memory, cfg.strategy)
              if cell.memory > 0 else None)
    spec = MethodSpec(
        name=entry.name,
        weights=LossWeights(entry.alpha, entry.beta, entry.gamma),
        lam=entry.lam,
        buffer=buffer,
    )
    t = cfg.train
    opt = OptimizerConfig(kind=t.optimizer, lr=t.lr,
                          momentum=t.momentum)
    return RunConfig(method=spec, epochs=t.epochs, batch_size=t.batch_size,
                     optimizer=opt, seed=cell.seed, model=cfg.model,
                     fisher_samples=t.fisher_samples,
                     replay_fraction=t.replay_fraction)


def run_config_dict(cfg: ExperimentConfig, cell: RunCell,
                    fingerprint: str) -> dict:
    """Everything that determines one run's results, for hashing."""
    return {
        "method": cell.method.to_dict(),
        "memory": cell.memory,
        "seed": cell.seed,
        "strategy": cfg.strategy,
        "fingerprint": fingerprint,
        "train": cfg.train.to_dict(),
        "model": cfg.model.to_dict(),
    }


def config_hash(run_cfg: dict) -> str:
    blob = json.dumps(run_cfg, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
