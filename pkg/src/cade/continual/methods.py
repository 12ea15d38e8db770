"""Training-method definitions and the per-batch objective dispatch."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ParameterStore, Tensor, add, scale
from .buffer import STRATEGIES
from .importance import ImportanceMap, quadratic_penalty
from .losses import LossWeights, ad_loss, cade_loss, classification_loss, kd_loss, psa_loss

Array = np.ndarray

METHODS = ("finetune", "replay", "joint", "ewc", "mas", "lwf", "dfwf", "cade")

# methods that distill from a frozen snapshot of the previous-task model
DISTILL_METHODS = ("lwf", "dfwf", "cade")


@dataclass(frozen=True)
class BufferConfig:
    capacity: int = 500
    strategy: str = "fixed-random"

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown buffer strategy {self.strategy!r}")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    weights: LossWeights = field(default_factory=LossWeights)
    lam: float = 100.0                      # ewc / mas penalty strength
    buffer: BufferConfig | None = None

    def __post_init__(self):
        if self.name not in METHODS:
            raise ValueError(f"unknown method {self.name!r}")
        if self.name in ("ewc", "mas") and (self.lam <= 0.0
                                            or not np.isfinite(self.lam)):
            raise ValueError(f"{self.name} needs a positive finite lambda")

    @property
    def uses_teacher(self) -> bool:
        return self.name in DISTILL_METHODS

    @property
    def uses_penalty(self) -> bool:
        return self.name in ("ewc", "mas")

    def buffer_config(self) -> BufferConfig | None:
        """Effective replay configuration; replay and cade default to one."""
        if self.buffer is not None:
            return self.buffer
        if self.name in ("replay", "cade"):
            return BufferConfig()
        return None


@dataclass
class ObjectiveContext:
    """Everything a method may need for one batch's loss.

    Teacher-side fields are plain arrays (already detached); they are all
    None on the first task, where no previous model exists.
    """
    logits: Tensor
    labels: Array
    params: ParameterStore | None = None
    importance: ImportanceMap | None = None
    teacher_logits: Array | None = None
    taps: list[tuple[str, Tensor]] | None = None
    teacher_taps: list[tuple[str, Array]] | None = None
    maps: Tensor | None = None
    teacher_maps: Array | None = None
    positive_mask: Array | None = None


def _require(ctx_field, what: str, method: str):
    if ctx_field is None:
        raise ValueError(f"{method}: context is missing {what}")
    return ctx_field


def method_objective(spec: MethodSpec, ctx: ObjectiveContext) -> Tensor:
    """The scalar training loss for one (possibly mixed) batch."""
    base = classification_loss(ctx.logits, ctx.labels)
    name = spec.name

    if name in ("finetune", "joint", "replay"):
        return base

    if name in ("ewc", "mas"):
        if ctx.importance is None:
            return base
        params = _require(ctx.params, "parameters", name)
        return add(base, quadratic_penalty(params, ctx.importance, spec.lam))

    # distillation methods: no teacher yet means plain classification
    if ctx.teacher_logits is None:
        return base

    w = spec.weights
    l_kd = kd_loss(ctx.teacher_logits, ctx.logits)

    if name == "lwf":
        return add(base, scale(l_kd, w.alpha))

    if name == "dfwf":
        loss = add(base, scale(l_kd, w.alpha))
        if w.gamma != 0.0:
            taps = _require(ctx.taps, "student taps", name)
            t_taps = _require(ctx.teacher_taps, "teacher taps", name)
            mask = _require(ctx.positive_mask, "positive mask", name)
            l_psa = psa_loss(t_taps[-1:], taps[-1:], mask)
            loss = add(loss, scale(l_psa, w.gamma))
        return loss

    # cade
    l_ad = None
    if w.beta != 0.0:
        maps = _require(ctx.maps, "student attention maps", name)
        t_maps = _require(ctx.teacher_maps, "teacher attention maps", name)
        l_ad = ad_loss(t_maps, maps)
    l_psa = None
    if w.gamma != 0.0:
        taps = _require(ctx.taps, "student taps", name)
        t_taps = _require(ctx.teacher_taps, "teacher taps", name)
        mask = _require(ctx.positive_mask, "positive mask", name)
        l_psa = psa_loss(t_taps, taps, mask)
    return cade_loss(base, l_kd, l_ad, l_psa, w)
