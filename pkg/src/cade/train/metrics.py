"""Scoring, equal error rate, and cross-seed report aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import FeatureMap
from ..model import Model, forward
from .batches import batch_from_maps, labels_from_maps

Array = np.ndarray

_EVAL_CHUNK = 64

# canonical table ordering: joint on top, the proposed method last
METHOD_ORDER = ("joint", "finetune", "ewc", "lwf", "mas", "replay",
                "dfwf", "cade")


@dataclass(frozen=True)
class ScoreSet:
    """One detection score per utterance plus its true label.

    The score is the logit gap (bona fide logit minus spoof logit), so any
    monotone rescaling of the classifier head leaves the EER unchanged.
    """
    scores: Array
    labels: Array

    def __post_init__(self):
        object.__setattr__(self, "scores",
                           np.asarray(self.scores, dtype=np.float64))
        object.__setattr__(self, "labels",
                           np.asarray(self.labels, dtype=np.int64))
        if self.scores.ndim != 1 or self.scores.shape != self.labels.shape:
            raise ValueError(f"scores shape {self.scores.shape} does not "
                             f"match labels shape {self.labels.shape}")
        if self.scores.size == 0:
            raise ValueError("score set is empty")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores contain non-finite values")
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise ValueError(f"labels must be 0 or 1, got {sorted(bad)}")


def evaluate(m: Model, maps: Sequence[FeatureMap]) -> ScoreSet:
    """Score every utterance; pure in the model parameters."""
    if not maps:
        raise ValueError("evaluate: eval set is empty")
    scores = []
    for start in range(0, len(maps), _EVAL_CHUNK):
        chunk = maps[start:start + _EVAL_CHUNK]
        logits = forward(m, batch_from_maps(chunk)).data
        scores.append(logits[:, 1] - logits[:, 0])
    return ScoreSet(np.concatenate(scores), labels_from_maps(list(maps)))


def eer(scores: ScoreSet) -> float:
    """Equal error rate of accept-if-score>=threshold detection.

    Thresholds swept are the midpoints between adjacent distinct scores
    plus both infinities; the reported rate is (FAR + FRR)/2 at the
    threshold with the smallest |FAR - FRR|, lowest threshold on ties.
    """
    s, y = scores.scores, scores.labels
    bona = y == 1
    spoof = ~bona
    if not bona.any() or not spoof.any():
        raise ValueError("eer needs both bona fide and spoof scores")
    uniq = np.unique(s)
    thr = np.concatenate(([-np.inf], (uniq[:-1] + uniq[1:]) / 2.0, [np.inf]))
    accept = s[None, :] >= thr[:, None]
    far = accept[:, spoof].mean(axis=1)
    frr = (~accept)[:, bona].mean(axis=1)
    i = int(np.argmin(np.abs(far - frr)))
    return float((far[i] + frr[i]) / 2.0)


@dataclass(frozen=True)
class RunReport:
    """Outcome of one sequential run.

    per_task_eer is lower triangular: row t holds the EER on every task
    seen so far, measured right after training task t finished.  A joint
    run has a single row covering all tasks.
    """
    method: str
    memory: int
    seed: int
    per_task_eer: tuple[tuple[float, ...], ...]
    final_eer: float
    fingerprint: str
    wall_ms: float
    counters: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.final_eer] + [v for row in self.per_task_eer for v in row]
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError("EER values must lie in [0, 1]")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")


@dataclass(frozen=True)
class SummaryRow:
    method: str
    memory: int
    mean_eer: float
    std_eer: float
    n_seeds: int


def aggregate(reports: Sequence[RunReport]) -> list[SummaryRow]:
    """Mean and sample std of final EER per (method, memory) cell.

    All reports must come from the same task stream; rows follow the
    canonical method ordering, then ascending memory.
    """
    if not reports:
        raise ValueError("aggregate: no reports")
    fp = reports[0].fingerprint
    for r in reports[1:]:
        if r.fingerprint != fp:
            raise ValueError(f"aggregate: mixed stream fingerprints "
                             f"{fp!r} and {r.fingerprint!r}")
    cells: dict[tuple[str, int], list[float]] = {}
    for r in reports:
        if r.method not in METHOD_ORDER:
            raise ValueError(f"aggregate: unknown method {r.method!r}")
        cells.setdefault((r.method, r.memory), []).append(r.final_eer)
    rows = []
    for method, memory in sorted(cells,
                                 key=lambda c: (METHOD_ORDER.index(c[0]),
                                                c[1])):
        vals = np.array(cells[(method, memory)])
        std = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        rows.append(SummaryRow(method, memory, float(vals.mean()), std,
                               int(vals.size)))
    return rows
