"""On-disk task-stream layout: binary feature files plus a JSON manifest.

Feature file (little-endian):
    magic   4 bytes  b"FMAP"
    version u32      = 1
    task_id u32
    label   u32      0 or 1
    frames  u32
    coeffs  u32
    data    frames * coeffs float64, row-major

Manifest: manifest.json with the stream fingerprint, the generator
config snapshot, and per-task file lists.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .lfcc import FeatureMap
from .synth import StreamConfig, Task, TaskStream

MAGIC = b"FMAP"
VERSION = 1
_HEADER = struct.Struct("<4sIIIII")


def write_feature_map(path: Path, m: FeatureMap) -> None:
    frames, coeffs = m.features.shape
    header = _HEADER.pack(MAGIC, VERSION, m.task_id, m.label, frames, coeffs)
    data = np.ascontiguousarray(m.features, dtype="<f8").tobytes()
    path.write_bytes(header + data)


def read_feature_map(path: Path) -> FeatureMap:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path.name}: truncated header")
    magic, version, task_id, label, frames, coeffs = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path.name}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path.name}: unsupported version {version}")
    expected = _HEADER.size + frames * coeffs * 8
    if len(raw) != expected:
        raise ValueError(f"{path.name}: expected {expected} bytes, got {len(raw)}")
    features = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(frames, coeffs)
    return FeatureMap(features.copy(), label=int(label), task_id=int(task_id))


def save_stream(stream: TaskStream, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    feat_dir = out_dir / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "format_version": VERSION,
        "fingerprint": stream.fingerprint,
        "config": asdict(stream.config) if stream.config is not None else None,
        "tasks": [],
    }
    for task in stream.tasks:
        entry = {"id": task.task_id, "train": [], "eval": []}
        for split_name, maps in (("train", task.train), ("eval", task.eval)):
            for i, m in enumerate(maps):
                name = f"t{task.task_id:02d}_{split_name}_{i:04d}.fmap"
                write_feature_map(feat_dir / name, m)
                entry[split_name].append(name)
        manifest["tasks"].append(entry)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_stream(out_dir: Path) -> TaskStream:
    out_dir = Path(out_dir)
    manifest_path = out_dir / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"no manifest.json in {out_dir}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != VERSION:
        raise ValueError(f"unsupported manifest version {manifest.get('format_version')}")
    feat_dir = out_dir / "features"
    tasks = []
    for entry in manifest["tasks"]:
        train = [read_feature_map(feat_dir / n) for n in entry["train"]]
        evals = [read_feature_map(feat_dir / n) for n in entry["eval"]]
        tasks.append(Task(entry["id"], train, evals))
    return TaskStream(tasks, manifest["fingerprint"], None)
