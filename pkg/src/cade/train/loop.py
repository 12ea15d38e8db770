"""Sequential-task training with replay mixing, teachers, and consolidation.

One run is single threaded and fully determined by its config seed, which
is split into independent streams for weight init, batch shuffling, buffer
decisions, and importance subsampling.  The joint method trains once on
the union of all tasks and touches none of the continual machinery.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..autodiff import Optimizer, OptimizerConfig, backward
from ..continual import (
    MemoryBuffer,
    MethodSpec,
    ObjectiveContext,
    buffer_insert,
    buffer_sample,
    estimate_fisher,
    mas_importance,
    method_objective,
)
from ..features import FeatureMap, TaskStream
from ..model import (
    Model,
    ModelConfig,
    attention_map_graph,
    default_config,
    forward_with_taps,
    init_model,
    snapshot,
)
from .batches import batch_from_maps, labels_from_maps
from .metrics import RunReport, eer, evaluate

Array = np.ndarray


def _default_optimizer() -> OptimizerConfig:
    return OptimizerConfig(kind="sgd", lr=0.01, momentum=0.9)


@dataclass(frozen=True)
class RunConfig:
    method: MethodSpec
    epochs: int = 6
    batch_size: int = 32
    optimizer: OptimizerConfig = field(default_factory=_default_optimizer)
    seed: int = 0
    model: ModelConfig = field(default_factory=default_config)
    fisher_samples: int = 200       # cap on per-task consolidation samples
    replay_fraction: float = 0.25   # buffer share of each mixed batch

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.replay_fraction < 1.0:
            raise ValueError("replay_fraction must be in [0, 1)")
        if self.fisher_samples < 1:
            raise ValueError("fisher_samples must be >= 1")

    def memory(self) -> int:
        bc = self.method.buffer_config()
        return bc.capacity if bc is not None else 0


def _embed_with(model: Model):
    """Final-tap embeddings of the current model, for buffer selection."""
    def embed(maps: Sequence[FeatureMap]) -> Array:
        out = []
        for start in range(0, len(maps), 64):
            fr = forward_with_taps(model,
                                   batch_from_maps(maps[start:start + 64]))
            out.append(fr.taps[-1][1].data)
        return np.concatenate(out, axis=0)
    return embed


def _train_step(model: Model, opt: Optimizer, spec: MethodSpec,
                batch_maps: list[FeatureMap], teacher: Model | None,
                imap, counters: dict[str, int]) -> None:
    x = batch_from_maps(batch_maps)
    y = labels_from_maps(batch_maps)
    fr = forward_with_taps(model, x)
    ctx = ObjectiveContext(logits=fr.logits, labels=y,
                           params=model.params, importance=imap)
    if teacher is not None:
        tr = forward_with_taps(teacher, x)
        ctx.teacher_logits = tr.logits.data
        w = spec.weights
        if spec.name == "cade" and w.beta != 0.0:
            b = np.argmax(fr.logits.data, axis=1)
            ctx.maps = attention_map_graph(fr.logits, fr.gradcam, b)
            ctx.teacher_maps = attention_map_graph(tr.logits, tr.gradcam,
                                                   b).data
        if w.gamma != 0.0 and spec.name in ("dfwf", "cade"):
            ctx.taps = fr.taps
            ctx.teacher_taps = [(name, t.data) for name, t in tr.taps]
            ctx.positive_mask = (y == 1).astype(np.float64)
    loss = method_objective(spec, ctx)
    grads = backward(loss)
    model.params.set_grads(grads.named)
    opt.step(model.params)
    model.params.clear_grads()
    counters["steps"] += 1


def _train_on(model: Model, opt: Optimizer, cfg: RunConfig,
              train_maps: list[FeatureMap], buf: MemoryBuffer | None,
              teacher: Model | None, imap,
              shuffle_rng: np.random.Generator,
              buffer_rng: np.random.Generator,
              counters: dict[str, int], epochs: int | None = None) -> None:
    spec = cfg.method
    n = len(train_maps)
    use_buf = buf is not None and len(buf) > 0
    n_draw = int(cfg.batch_size * cfg.replay_fraction) if use_buf else 0
    n_new = cfg.batch_size - n_draw
    for _ in range(cfg.epochs if epochs is None else epochs):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, n_new):
            batch = [train_maps[i] for i in perm[start:start + n_new]]
            if n_draw:
                batch = batch + buffer_sample(buf, n_draw, buffer_rng)
                counters["buffer_draws"] += n_draw
            try:
                _train_step(model, opt, spec, batch, teacher, imap, counters)
            except ValueError as e:
                raise ValueError(
                    f"run aborted at step {counters['steps']}: {e}") from e


def _consolidate(model: Model, cfg: RunConfig, task_maps: list[FeatureMap],
                 imap, fisher_rng: np.random.Generator):
    data = batch_from_maps(task_maps)
    labels = labels_from_maps(task_maps)
    if cfg.method.name == "ewc":
        new = estimate_fisher(model, data, labels=labels,
                              n_samples=cfg.fisher_samples, rng=fisher_rng)
    else:
        n = data.shape[0]
        if n > cfg.fisher_samples:
            picks = np.sort(fisher_rng.choice(n, cfg.fisher_samples,
                                              replace=False))
            data = data[picks]
        new = mas_importance(model, data)
    return new if imap is None else imap.merged_with(new)


def run_sequential(cfg: RunConfig, stream: TaskStream) -> RunReport:
    """Train through the stream task by task and report EERs.

    After every task the model is scored on each seen task's eval split;
    the final figure pools every task's eval split into one score set.
    """
    return run_and_model(cfg, stream)[0]


def run_and_model(cfg: RunConfig,
                  stream: TaskStream) -> tuple[RunReport, Model]:
    """run_sequential plus the trained model, for checkpointing."""
    if not stream.tasks:
        raise ValueError("run_sequential: stream has no tasks")
    t0 = time.perf_counter()
    states = np.random.SeedSequence(cfg.seed).generate_state(4)
    init_seed, shuffle_seed, buffer_seed, fisher_seed = (int(s)
                                                         for s in states)
    model = init_model(cfg.model, init_seed)
    opt = Optimizer(cfg.optimizer)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    buffer_rng = np.random.default_rng(buffer_seed)
    fisher_rng = np.random.default_rng(fisher_seed)
    counters = {"steps": 0, "teacher_snapshots": 0, "buffer_inserts": 0,
                "buffer_draws": 0, "consolidations": 0}
    spec = cfg.method

    rows: list[tuple[float, ...]] = []
    if spec.name == "joint":
        # one mixed pass, but with the same number of sample presentations
        # as a sequential run, so the upper bound is actually converged
        union = [m for task in stream.tasks for m in task.train]
        _train_on(model, opt, cfg, union, None, None, None,
                  shuffle_rng, buffer_rng, counters,
                  epochs=cfg.epochs * len(stream.tasks))
        rows.append(tuple(eer(evaluate(model, task.eval))
                          for task in stream.tasks))
    else:
        bc = spec.buffer_config()
        buf = MemoryBuffer(bc.capacity, bc.strategy) if bc else None
        teacher = None
        imap = None
        for t_idx, task in enumerate(stream.tasks):
            if t_idx > 0 and spec.uses_teacher:
                teacher = snapshot(model)
                counters["teacher_snapshots"] += 1
            _train_on(model, opt, cfg, task.train, buf, teacher, imap,
                      shuffle_rng, buffer_rng, counters)
            if buf is not None:
                embed = (_embed_with(model)
                         if buf.strategy == "mean-of-feature" else None)
                buffer_insert(buf, task.train, buffer_rng, embed=embed)
                counters["buffer_inserts"] += 1
            if spec.uses_penalty:
                imap = _consolidate(model, cfg, task.train, imap, fisher_rng)
                counters["consolidations"] += 1
            rows.append(tuple(eer(evaluate(model, stream.tasks[j].eval))
                              for j in range(t_idx + 1)))

    pool = [m for task in stream.tasks for m in task.eval]
    final = eer(evaluate(model, pool))
    wall_ms = (time.perf_counter() - t0) * 1000.0
    report = RunReport(method=spec.name, memory=cfg.memory(), seed=cfg.seed,
                       per_task_eer=tuple(rows), final_eer=final,
                       fingerprint=stream.fingerprint, wall_ms=wall_ms,
                       counters=counters)
    return report, model
