"""Central finite-difference gradients, used as the test oracle."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor

Array = np.ndarray


def numeric_gradient(f: Callable[[Tensor], float | Tensor], x: Tensor,
                     eps: float = 1e-6) -> Array:
    """Component-wise (f(x+eps*e_i) - f(x-eps*e_i)) / (2*eps)."""
    if eps <= 0.0:
        raise ValueError("numeric_gradient: eps must be positive")

    def evaluate(arr: Array) -> float:
        out = f(Tensor(arr))
        val = out.item() if isinstance(out, Tensor) else float(out)
        if not np.isfinite(val):
            raise ValueError("numeric_gradient: non-finite function value")
        return val

    base = x.data
    grad = np.zeros_like(base)
    flat = grad.reshape(-1)
    for i in range(base.size):
        bumped = base.copy().reshape(-1)
        bumped[i] += eps
        hi = evaluate(bumped.reshape(base.shape))
        bumped[i] -= 2.0 * eps
        lo = evaluate(bumped.reshape(base.shape))
        flat[i] = (hi - lo) / (2.0 * eps)
    return grad


def relative_error(analytic: Array, numeric: Array,
                   floor: float = 1e-4) -> float:
    """Max absolute difference scaled by the larger gradient magnitude."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ValueError(f"relative_error: shapes {a.shape} vs {n.shape}")
    denom = max(floor, float(np.abs(a).max(initial=0.0)),
                float(np.abs(n).max(initial=0.0)))
    return float(np.abs(a - n).max(initial=0.0)) / denom
