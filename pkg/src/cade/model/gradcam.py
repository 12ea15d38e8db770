"""Attention maps over conv-block activations.

Per-channel weights are the spatial average of the class logit's gradient
with respect to the block's activations; the map is the channel-weighted
sum of those activations, optionally rectified, flattened row-major.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, backward, mul, relu, reshape, sum_
from .net import Model, run_block, run_from_block

Array = np.ndarray


@dataclass(frozen=True)
class AttentionMap:
    values: Array       # length = h*w of the chosen block
    class_index: int
    layer: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("attention map has non-finite values")


def activation_gradients(logits: Tensor, activations: Tensor,
                         classes) -> Array:
    """d logits[i, classes[i]] / d activations, one backward for the batch.

    Valid because samples are independent through the network, so the
    gradient of the summed selected logits separates per sample.
    """
    classes = np.asarray(classes, dtype=np.int64)
    n, k = logits.shape
    if classes.shape != (n,):
        raise ValueError(f"need {n} class picks, got shape {classes.shape}")
    if np.any(classes < 0) or np.any(classes >= k):
        raise ValueError("class index out of range")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), classes] = 1.0
    root = sum_(mul(logits, Tensor(onehot)))
    return backward(root).wrt(activations)


def attention_map_graph(logits: Tensor, activations: Tensor, classes,
                        apply_relu: bool = True) -> Tensor:
    """Differentiable [N, h*w] maps for a batch already forwarded.

    The channel weights are detached constants: gradients of a loss on the
    returned maps flow through the activations only, keeping everything
    first order.
    """
    g = activation_gradients(logits, activations, classes)
    w = g.mean(axis=(2, 3))                                   # [N, C]
    n, _, h, wd = activations.shape
    wfull = np.broadcast_to(w[:, :, None, None], activations.shape).copy()
    m = sum_(mul(activations, Tensor(wfull)), axis=1)         # [N, h, w]
    if apply_relu:
        m = relu(m)
    return reshape(m, (n, h * wd))


def gradcam(m: Model, sample, class_index: int, layer: int | None = None,
            apply_relu: bool = True) -> AttentionMap:
    """Attention map of one sample for `class_index` at a conv block."""
    cfg = m.config
    layer = cfg.gradcam_layer if layer is None else layer
    if not 0 <= layer < len(cfg.conv_blocks):
        raise ValueError(f"gradcam: layer {layer} out of range")
    if not 0 <= class_index < cfg.n_classes:
        raise ValueError(f"gradcam: class {class_index} out of range")
    arr = np.asarray(sample, dtype=np.float64)
    if arr.shape == cfg.input_shape:
        arr = arr[None]
    if arr.shape != (1, *cfg.input_shape):
        raise ValueError(f"gradcam: sample shape {arr.shape} does not match "
                         f"input shape {cfg.input_shape}")
    a = Tensor(arr)
    for i in range(layer + 1):
        a = run_block(m, i, a)
    logits = run_from_block(m, layer, a)
    g = activation_gradients(logits, a, np.array([class_index]))
    w = g[0].mean(axis=(1, 2))                                # [C]
    raw = (w[:, None, None] * a.data[0]).sum(axis=0)          # [h, w]
    if apply_relu:
        raw = np.maximum(raw, 0.0)
    return AttentionMap(values=raw.reshape(-1).copy(),
                        class_index=class_index, layer=layer)
