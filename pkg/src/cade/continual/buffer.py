"""Replay memory with four selection strategies.

Items are feature maps carrying their own label and task id.  Capacity is
a hard bound under every strategy; the ring buffer additionally keeps the
two class counts within one of each other after every single insertion.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

import numpy as np

from ..features import FeatureMap

Array = np.ndarray

STRATEGIES = ("fixed-random", "reservoir", "ring-buffer", "mean-of-feature")

EmbedFn = Callable[[Sequence[FeatureMap]], Array]


class MemoryBuffer:
    def __init__(self, capacity: int, strategy: str = "fixed-random"):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown buffer strategy {strategy!r}")
        self.capacity = capacity
        self.strategy = strategy
        self._flat: list[FeatureMap] = []            # reservoir
        self._seen = 0
        self._by_task: dict[int, list[FeatureMap]] = {}   # fixed-random
        self._by_class: dict[int, deque[FeatureMap]] = {0: deque(), 1: deque()}

    def __len__(self) -> int:
        if self.strategy == "reservoir":
            return len(self._flat)
        if self.strategy == "fixed-random":
            return sum(len(v) for v in self._by_task.values())
        return sum(len(v) for v in self._by_class.values())

    def items(self) -> list[FeatureMap]:
        if self.strategy == "reservoir":
            return list(self._flat)
        if self.strategy == "fixed-random":
            return [s for t in sorted(self._by_task)
                    for s in self._by_task[t]]
        return list(self._by_class[0]) + list(self._by_class[1])

    def class_counts(self) -> tuple[int, int]:
        items = self.items()
        ones = sum(1 for s in items if s.label == 1)
        return len(items) - ones, ones

    def insert(self, samples: Sequence[FeatureMap], rng: np.random.Generator,
               embed: EmbedFn | None = None) -> None:
        if not samples:
            return
        if self.strategy == "reservoir":
            self._insert_reservoir(samples, rng)
        elif self.strategy == "fixed-random":
            self._insert_fixed_random(samples, rng)
        elif self.strategy == "ring-buffer":
            self._insert_ring(samples)
        else:
            if embed is None:
                raise ValueError("mean-of-feature buffer needs an embed "
                                 "function")
            self._insert_mean_of_feature(samples, embed)

    # one uniform draw per arriving item; item number n (1-based over the
    # whole stream) fills slot n-1 while the buffer is short, otherwise it
    # replaces slot floor(u*n) when that lands below capacity
    def _insert_reservoir(self, samples, rng) -> None:
        cap = self.capacity
        k = len(samples)
        n = self._seen + 1 + np.arange(k, dtype=np.int64)
        j = np.floor(rng.random(k) * n).astype(np.int64)
        self._seen += k
        targets = np.where(n <= cap, n - 1, j)
        active = (n <= cap) | (j < cap)
        slot_last: dict[int, int] = {}
        for idx in np.flatnonzero(active):
            slot_last[int(targets[idx])] = int(idx)
        for slot in sorted(slot_last):
            if slot < len(self._flat):
                self._flat[slot] = samples[slot_last[slot]]
            else:
                self._flat.append(samples[slot_last[slot]])

    def _quota(self, keys: list[int]) -> dict[int, int]:
        base, rem = divmod(self.capacity, len(keys))
        return {t: base + (1 if i < rem else 0)
                for i, t in enumerate(sorted(keys))}

    def _insert_fixed_random(self, samples, rng) -> None:
        task = samples[0].task_id
        if any(s.task_id != task for s in samples):
            raise ValueError("fixed-random insert expects one task at a time")
        if task in self._by_task:
            raise ValueError(f"task {task} already inserted")
        quota = self._quota(list(self._by_task) + [task])
        for t in sorted(self._by_task):
            kept = self._by_task[t]
            if len(kept) > quota[t]:
                idx = np.sort(rng.choice(len(kept), quota[t], replace=False))
                self._by_task[t] = [kept[i] for i in idx]
        take = min(quota[task], len(samples))
        idx = np.sort(rng.choice(len(samples), take, replace=False))
        self._by_task[task] = [samples[i] for i in idx]

    def _insert_ring(self, samples) -> None:
        cap = self.capacity
        for s in samples:
            mine = self._by_class[s.label]
            other = self._by_class[1 - s.label]
            total = len(mine) + len(other)
            if len(mine) <= len(other) and total < cap:
                mine.append(s)
            elif len(mine) < len(other) and total == cap:
                other.popleft()
                mine.append(s)
            else:
                if mine:
                    mine.popleft()
                mine.append(s)

    def _insert_mean_of_feature(self, samples, embed: EmbedFn) -> None:
        cap = self.capacity
        quota = {1: cap - cap // 2, 0: cap // 2}
        for c in (0, 1):
            pool = list(self._by_class[c]) + [s for s in samples
                                              if s.label == c]
            if not pool:
                continue
            e = np.asarray(embed(pool), dtype=np.float64)
            if e.ndim != 2 or e.shape[0] != len(pool):
                raise ValueError(f"embed returned shape {e.shape} for "
                                 f"{len(pool)} items")
            d2 = ((e - e.mean(axis=0)) ** 2).sum(axis=1)
            keep = np.argsort(d2, kind="stable")[:quota[c]]
            self._by_class[c] = deque(pool[i] for i in np.sort(keep))


def buffer_insert(buf: MemoryBuffer, samples: Sequence[FeatureMap],
                  rng: np.random.Generator,
                  embed: EmbedFn | None = None) -> MemoryBuffer:
    buf.insert(samples, rng, embed=embed)
    return buf


def buffer_sample(buf: MemoryBuffer, n: int,
                  rng: np.random.Generator) -> list[FeatureMap]:
    """n uniform draws, without replacement unless n exceeds the size."""
    items = buf.items()
    if not items:
        raise ValueError("cannot sample from an empty buffer")
    if n < 1:
        raise ValueError("sample count must be >= 1")
    if n > len(items):
        idx = rng.integers(0, len(items), size=n)
    else:
        idx = rng.choice(len(items), size=n, replace=False)
    return [items[int(i)] for i in idx]
