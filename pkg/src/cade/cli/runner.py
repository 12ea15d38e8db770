"""Experiment-matrix execution: worker pool, resume, failure isolation.

The parent process is the only writer of results.jsonl and errors.jsonl;
workers hand finished records back over the pool.  Completed cells are
identified by their config hash, so a rerun of a finished matrix executes
nothing.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import traceback
from pathlib import Path

from ..features import TaskStream, load_stream, synth_task_stream
from ..model import save_checkpoint
from ..train import run_and_model
from .config import (
    ExperimentConfig,
    RunCell,
    config_hash,
    expand_cells,
    make_run_config,
    run_config_dict,
)

_WORKER: dict = {}


def resolve_stream(cfg: ExperimentConfig) -> TaskStream:
    if cfg.data is not None:
        return load_stream(Path(cfg.data))
    return synth_task_stream(cfg.stream, cfg.stream_seed)


def setting_label(cfg: ExperimentConfig, stream: TaskStream) -> str:
    """Task-family transition string, e.g. "a+b TO c+d", for table rows."""
    if stream.config is not None:
        return " TO ".join("+".join(f.name for f in fams)
                           for fams in stream.config.tasks)
    if cfg.data is not None:
        manifest = json.loads(
            (Path(cfg.data) / "manifest.json").read_text())
        conf = manifest.get("config") or {}
        if conf.get("tasks"):
            return " TO ".join("+".join(f["name"] for f in fams)
                               for fams in conf["tasks"])
    return f"stream {stream.fingerprint}"


def _record_for(cfg: ExperimentConfig, cell: RunCell, stream: TaskStream,
                setting: str, report) -> dict:
    rcd = run_config_dict(cfg, cell, stream.fingerprint)
    return {
        "method": cell.method.name,
        "memory": cell.memory,
        "seed": cell.seed,
        "per_task_eer": [list(row) for row in report.per_task_eer],
        "final_eer": report.final_eer,
        "config_hash": config_hash(rcd),
        "wall_ms": report.wall_ms,
        "fingerprint": stream.fingerprint,
        "setting": setting,
        "counters": report.counters,
        "config": rcd,
    }


def _exec_cell(cfg: ExperimentConfig, stream: TaskStream, cell: RunCell,
               setting: str, out_dir: Path):
    h = config_hash(run_config_dict(cfg, cell, stream.fingerprint))
    try:
        report, model = run_and_model(make_run_config(cfg, cell), stream)
        ckpt_dir = out_dir / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, ckpt_dir / f"{h}.ckpt")
        return ("ok", _record_for(cfg, cell, stream, setting, report))
    except Exception as e:
        return ("err", {
            "method": cell.method.name,
            "memory": cell.memory,
            "seed": cell.seed,
            "config_hash": h,
            "error": f"{type(e).__name__}: {e}",
            "traceback": traceback.format_exc(),
        })


def _init_worker(cfg: ExperimentConfig, stream: TaskStream, setting: str,
                 out_dir: str) -> None:
    _WORKER["cfg"] = cfg
    _WORKER["stream"] = stream
    _WORKER["setting"] = setting
    _WORKER["out"] = Path(out_dir)


def _worker_cell(cell: RunCell):
    return _exec_cell(_WORKER["cfg"], _WORKER["stream"], cell,
                      _WORKER["setting"], _WORKER["out"])


def existing_hashes(results_path: Path) -> set[str]:
    done = set()
    if results_path.exists():
        for line in results_path.read_text().splitlines():
            if not line.strip():
                continue
            done.add(json.loads(line)["config_hash"])
    return done


def run_matrix(cfg: ExperimentConfig, out_dir: Path, jobs: int = 1,
               seed_offset: int = 0, force: bool = False,
               log=print) -> dict:
    """Execute every pending cell; returns counts for the exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.jsonl"
    errors_path = out_dir / "errors.jsonl"
    if force:
        results_path.unlink(missing_ok=True)
        errors_path.unlink(missing_ok=True)

    stream = resolve_stream(cfg)
    setting = setting_label(cfg, stream)
    done = existing_hashes(results_path)
    cells = expand_cells(cfg, seed_offset)
    pending = [
        c for c in cells
        if config_hash(run_config_dict(cfg, c, stream.fingerprint)) not in done
    ]
    skipped = len(cells) - len(pending)
    if skipped:
        log(f"skipping {skipped} completed run(s)")

    counts = {"ok": 0, "failed": 0, "skipped": skipped}
    with results_path.open("a") as results_f, \
            errors_path.open("a") as errors_f:
        def consume(cell, outcome):
            kind, payload = outcome
            if kind == "ok":
                results_f.write(json.dumps(payload, sort_keys=True) + "\n")
                results_f.flush()
                counts["ok"] += 1
                log(f"done {cell.label()}  final_eer="
                    f"{payload['final_eer']:.5f}")
            else:
                errors_f.write(json.dumps(payload, sort_keys=True) + "\n")
                errors_f.flush()
                counts["failed"] += 1
                log(f"FAILED {cell.label()}: {payload['error']}")

        if jobs <= 1 or len(pending) <= 1:
            for cell in pending:
                consume(cell, _exec_cell(cfg, stream, cell, setting,
                                         out_dir))
        else:
            ctx = mp.get_context("fork" if "fork" in
                                 mp.get_all_start_methods() else "spawn")
            with ctx.Pool(min(jobs, len(pending)), _init_worker,
                          (cfg, stream, setting, str(out_dir))) as pool:
                for cell, outcome in zip(
                        pending, pool.imap(_worker_cell, pending)):
                    consume(cell, outcome)
    return counts
