"""Small convolutional spoof classifier with embedding taps at several depths.

The network is a stack of conv blocks (conv -> activation -> max-pool)
followed by one hidden dense layer and a two-logit output head.  Besides
the logits, a forward pass exposes flattened embeddings from configured
blocks plus the dense hidden layer, and keeps the activations of one
designated block for attention-map extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import (
    ParameterStore,
    Tensor,
    conv2d,
    dense,
    leaky_relu,
    maxpool2d,
    relu,
    reshape,
)

Array = np.ndarray

_ACTIVATIONS = ("relu", "leaky_relu")
_LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class ConvBlock:
    out_channels: int
    kernel: tuple[int, int] = (3, 3)
    pool: tuple[int, int] = (2, 2)

    def __post_init__(self):
        if self.out_channels < 1:
            raise ValueError("conv block needs at least one output channel")
        if min(self.kernel) < 1 or min(self.pool) < 1:
            raise ValueError("conv block kernel and pool dims must be positive")


@dataclass(frozen=True)
class ModelConfig:
    conv_blocks: tuple[ConvBlock, ...]
    activation: str = "leaky_relu"
    tap_blocks: tuple[int, ...] = ()
    tap_dense: bool = True
    gradcam_layer: int = 0
    dense_width: int = 64
    n_classes: int = 2
    input_shape: tuple[int, int, int] = (1, 20, 32)   # C, H, W

    def __post_init__(self):
        if not self.conv_blocks:
            raise ValueError("model needs at least one conv block")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        nb = len(self.conv_blocks)
        if not 0 <= self.gradcam_layer < nb:
            raise ValueError(f"gradcam_layer {self.gradcam_layer} out of range "
                             f"for {nb} blocks")
        if any(not 0 <= i < nb for i in self.tap_blocks):
            raise ValueError("tap block index out of range")
        if list(self.tap_blocks) != sorted(set(self.tap_blocks)):
            raise ValueError("tap blocks must be strictly increasing")
        if not self.tap_blocks and not self.tap_dense:
            raise ValueError("model needs at least one embedding tap")
        if self.dense_width < 1 or self.n_classes < 2:
            raise ValueError("dense_width must be >= 1 and n_classes >= 2")
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ValueError(f"bad input shape {self.input_shape}")
        self.block_dims()   # walks the spatial sizes, rejects collapse to zero

    def block_dims(self) -> list[tuple[int, int, int]]:
        """(channels, height, width) after each block; same-padded convs."""
        _, h, w = self.input_shape
        dims = []
        for i, blk in enumerate(self.conv_blocks):
            kh, kw = blk.kernel
            h = h + 2 * (kh // 2) - kh + 1
            w = w + 2 * (kw // 2) - kw + 1
            if h < blk.pool[0] or w < blk.pool[1]:
                raise ValueError(f"block {i}: pool {blk.pool} larger than "
                                 f"feature map {(h, w)}")
            h, w = h // blk.pool[0], w // blk.pool[1]
            dims.append((blk.out_channels, h, w))
        return dims

    def flat_size(self) -> int:
        c, h, w = self.block_dims()[-1]
        return c * h * w

    def to_dict(self) -> dict:
        return {
            "conv_blocks": [[b.out_channels, list(b.kernel), list(b.pool)]
                            for b in self.conv_blocks],
            "activation": self.activation,
            "tap_blocks": list(self.tap_blocks),
            "tap_dense": self.tap_dense,
            "gradcam_layer": self.gradcam_layer,
            "dense_width": self.dense_width,
            "n_classes": self.n_classes,
            "input_shape": list(self.input_shape),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            conv_blocks=tuple(ConvBlock(c, tuple(k), tuple(p))
                              for c, k, p in d["conv_blocks"]),
            activation=d["activation"],
            tap_blocks=tuple(d["tap_blocks"]),
            tap_dense=bool(d["tap_dense"]),
            gradcam_layer=int(d["gradcam_layer"]),
            dense_width=int(d["dense_width"]),
            n_classes=int(d["n_classes"]),
            input_shape=tuple(d["input_shape"]),
        )


def default_config() -> ModelConfig:
    return ModelConfig(
        conv_blocks=(ConvBlock(8), ConvBlock(16), ConvBlock(32)),
        tap_blocks=(0, 1, 2),
        gradcam_layer=2,
    )


@dataclass
class Model:
    config: ModelConfig
    params: ParameterStore
    seed: int
    frozen: bool = False


@dataclass
class ForwardResult:
    logits: Tensor                      # [N, n_classes]
    taps: list[tuple[str, Tensor]]      # (layer id, [N, flat]) per tap
    gradcam: Tensor                     # [N, C, h, w] at gradcam_layer


def param_spec(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical parameter names and shapes, in creation order."""
    specs: list[tuple[str, tuple[int, ...]]] = []
    c_in = cfg.input_shape[0]
    for i, blk in enumerate(cfg.conv_blocks):
        specs.append((f"conv{i}.w", (blk.out_channels, c_in, *blk.kernel)))
        specs.append((f"conv{i}.b", (blk.out_channels,)))
        c_in = blk.out_channels
    specs.append(("fc.w", (cfg.flat_size(), cfg.dense_width)))
    specs.append(("fc.b", (cfg.dense_width,)))
    specs.append(("out.w", (cfg.dense_width, cfg.n_classes)))
    specs.append(("out.b", (cfg.n_classes,)))
    return specs


def init_model(cfg: ModelConfig, seed: int) -> Model:
    """Kaiming-uniform fan-in weights, zero biases, deterministic in seed."""
    rng = np.random.default_rng(seed)
    if cfg.activation == "leaky_relu":
        gain = math.sqrt(2.0 / (1.0 + _LEAKY_SLOPE ** 2))
    else:
        gain = math.sqrt(2.0)
    store = ParameterStore()
    for name, shape in param_spec(cfg):
        if name.endswith(".b"):
            store.add(name, np.zeros(shape))
            continue
        fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
        bound = gain * math.sqrt(3.0 / fan_in)
        store.add(name, rng.uniform(-bound, bound, size=shape))
    return Model(config=cfg, params=store, seed=seed)


def _act(cfg: ModelConfig, x: Tensor) -> Tensor:
    if cfg.activation == "relu":
        return relu(x)
    return leaky_relu(x, _LEAKY_SLOPE)


def run_block(m: Model, i: int, x: Tensor) -> Tensor:
    """conv -> activation -> max-pool for block `i` (same padding)."""
    blk = m.config.conv_blocks[i]
    kh, kw = blk.kernel
    x = conv2d(x, m.params[f"conv{i}.w"], m.params[f"conv{i}.b"],
               stride=1, padding=(kh // 2, kw // 2))
    return maxpool2d(_act(m.config, x), blk.pool)


def run_head(m: Model, x: Tensor) -> tuple[Tensor, Tensor]:
    """Last block output -> (logits, dense hidden embedding)."""
    flat = reshape(x, (x.shape[0], -1))
    e = _act(m.config, dense(flat, m.params["fc.w"], m.params["fc.b"]))
    logits = dense(e, m.params["out.w"], m.params["out.b"])
    return logits, e


def run_from_block(m: Model, k: int, a: Tensor) -> Tensor:
    """Logits computed from the output activations of block `k`."""
    x = a
    for i in range(k + 1, len(m.config.conv_blocks)):
        x = run_block(m, i, x)
    return run_head(m, x)[0]


def forward_with_taps(m: Model, batch) -> ForwardResult:
    x = batch if isinstance(batch, Tensor) else Tensor(batch)
    cfg = m.config
    if x.data.ndim != 4 or x.shape[1:] != cfg.input_shape:
        raise ValueError(f"forward: batch shape {x.shape} does not match "
                         f"input shape {cfg.input_shape}")
    outs = []
    for i in range(len(cfg.conv_blocks)):
        x = run_block(m, i, x)
        outs.append(x)
    logits, e = run_head(m, outs[-1])
    n = outs[-1].shape[0]
    taps = [(f"conv{i}", reshape(outs[i], (n, -1))) for i in cfg.tap_blocks]
    if cfg.tap_dense:
        taps.append(("fc", e))
    return ForwardResult(logits=logits, taps=taps,
                         gradcam=outs[cfg.gradcam_layer])


def forward(m: Model, batch) -> Tensor:
    return forward_with_taps(m, batch).logits
