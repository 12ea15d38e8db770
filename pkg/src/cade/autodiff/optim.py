"""Named parameter storage and the SGD / Adam update rules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor

Array = np.ndarray


class ParameterStore:
    """Ordered map of unique names to trainable tensors.

    Gradients live next to the values: the trainer copies them in from a
    backward sweep before calling the optimizer.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: Array) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        t = Tensor(value, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def values(self) -> dict[str, Array]:
        return {n: t.data.copy() for n, t in self._params.items()}

    def set_grads(self, grads: dict[str, Array]) -> None:
        for name, t in self._params.items():
            g = grads.get(name)
            if g is not None and g.shape != t.data.shape:
                raise ValueError(f"grad shape {g.shape} != value shape "
                                 f"{t.data.shape} for {name!r}")
            t.grad = g

    def clear_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def checksum(self) -> float:
        """Order-sensitive digest of all parameter values."""
        total = 0.0
        for i, (_, t) in enumerate(sorted(self._params.items())):
            total += float((t.data * (i + 1)).sum())
        return total


@dataclass
class OptimizerConfig:
    kind: str = "sgd"            # "sgd" or "adam"
    lr: float = 0.01
    momentum: float = 0.0        # sgd only
    beta1: float = 0.9           # adam only
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.lr <= 0.0:
            raise ValueError("optimizer lr must be positive")


class Optimizer:
    """Applies one deterministic update per `step` call.

    sgd:  v <- momentum*v + g;  p <- p - lr*v
    adam: bias-corrected first/second moments, standard update.
    """

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self._state: dict[str, dict[str, Array]] = {}
        self._t = 0

    def step(self, params: ParameterStore) -> None:
        cfg = self.config
        missing = [n for n, t in params.items() if t.grad is None]
        if missing:
            raise ValueError(f"optimizer_step: missing grad for {missing[0]!r}")
        self._t += 1
        for name, p in params.items():
            g = p.grad
            st = self._state.setdefault(name, {})
            if cfg.kind == "sgd":
                v = st.get("v")
                if v is None:
                    v = np.zeros_like(p.data)
                v = cfg.momentum * v + g
                st["v"] = v
                p.data = p.data - cfg.lr * v
            else:
                m = st.get("m")
                v = st.get("v")
                if m is None:
                    m = np.zeros_like(p.data)
                    v = np.zeros_like(p.data)
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
                st["m"], st["v"] = m, v
                mhat = m / (1.0 - cfg.beta1 ** self._t)
                vhat = v / (1.0 - cfg.beta2 ** self._t)
                p.data = p.data - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)
