"""Parameter-importance estimates and the quadratic anchor penalty."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    ParameterStore,
    Tensor,
    add,
    backward,
    mul,
    scale,
    softmax_cross_entropy,
    sub,
    sum_,
)
from ..model import Model, forward

Array = np.ndarray


@dataclass
class ImportanceMap:
    importance: dict[str, Array]
    anchor: dict[str, Array]

    def __post_init__(self):
        if set(self.importance) != set(self.anchor):
            raise ValueError("importance and anchor name sets differ")
        for name, imp in self.importance.items():
            if imp.shape != self.anchor[name].shape:
                raise ValueError(f"importance shape mismatch for {name!r}")
            if not np.all(np.isfinite(imp)) or np.any(imp < 0.0):
                raise ValueError(f"importance for {name!r} must be finite "
                                 "and non-negative")

    def merged_with(self, other: "ImportanceMap") -> "ImportanceMap":
        """Sum importances, keep the newer anchors."""
        imp = {n: self.importance[n] + other.importance[n]
               for n in self.importance}
        return ImportanceMap(importance=imp,
                             anchor={n: a.copy()
                                     for n, a in other.anchor.items()})


def _per_sample_grads(m: Model, root: Tensor) -> dict[str, Array]:
    named = backward(root).named
    return {name: named.get(name, np.zeros_like(t.data))
            for name, t in m.params.items()}


def _anchors(m: Model) -> dict[str, Array]:
    return {name: t.data.copy() for name, t in m.params.items()}


def estimate_fisher(m: Model, data: Array, labels=None,
                    n_samples: int | None = None,
                    rng: np.random.Generator | None = None) -> ImportanceMap:
    """Diagonal Fisher: mean squared gradient of the label log-likelihood.

    With `labels=None` each sample's label is drawn from the model's own
    predictive distribution (requires `rng`); otherwise the given labels
    are used.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 4 or data.shape[0] == 0:
        raise ValueError("estimate_fisher: need a non-empty [N,C,H,W] batch")
    n = data.shape[0]
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError("estimate_fisher: labels do not match batch")
    elif rng is None:
        raise ValueError("estimate_fisher: rng required to sample labels")
    picks = np.arange(n)
    if n_samples is not None and n_samples < n:
        if n_samples < 1:
            raise ValueError("estimate_fisher: n_samples must be >= 1")
        picks = np.sort(rng.choice(n, n_samples, replace=False))
    acc = {name: np.zeros_like(t.data) for name, t in m.params.items()}
    for i in picks:
        logits = forward(m, data[i:i + 1])
        if labels is not None:
            y = int(labels[i])
        else:
            z = logits.data[0]
            p = np.exp(z - z.max())
            p /= p.sum()
            y = int(rng.choice(len(p), p=p))
        nll = softmax_cross_entropy(logits, [y])
        for name, g in _per_sample_grads(m, nll).items():
            acc[name] += g * g
    k = len(picks)
    return ImportanceMap(importance={n_: a / k for n_, a in acc.items()},
                         anchor=_anchors(m))


def mas_importance(m: Model, data: Array) -> ImportanceMap:
    """Mean absolute gradient of the squared L2 norm of the logits."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 4 or data.shape[0] == 0:
        raise ValueError("mas_importance: need a non-empty [N,C,H,W] batch")
    acc = {name: np.zeros_like(t.data) for name, t in m.params.items()}
    n = data.shape[0]
    for i in range(n):
        logits = forward(m, data[i:i + 1])
        sqnorm = sum_(mul(logits, logits))
        for name, g in _per_sample_grads(m, sqnorm).items():
            acc[name] += np.abs(g)
    return ImportanceMap(importance={n_: a / n for n_, a in acc.items()},
                         anchor=_anchors(m))


def quadratic_penalty(params: ParameterStore, imap: ImportanceMap,
                      lam: float) -> Tensor:
    """(lam/2) * sum of importance * (param - anchor)^2, differentiable."""
    if lam < 0.0 or not np.isfinite(lam):
        raise ValueError("quadratic penalty lambda must be finite and >= 0")
    total: Tensor | None = None
    for name in sorted(imap.importance):
        if name not in params:
            raise ValueError(f"penalty references unknown parameter {name!r}")
        p = params[name]
        if p.shape != imap.anchor[name].shape:
            raise ValueError(f"anchor shape mismatch for {name!r}")
        d = sub(p, Tensor(imap.anchor[name]))
        term = sum_(mul(Tensor(imap.importance[name]), mul(d, d)))
        total = term if total is None else add(total, term)
    if total is None:
        return Tensor(np.asarray(0.0))
    return scale(total, lam / 2.0)
