from .buffer import STRATEGIES, MemoryBuffer, buffer_insert, buffer_sample
from .importance import ImportanceMap, estimate_fisher, mas_importance, quadratic_penalty
from .losses import (
    LossWeights,
    ad_loss,
    cade_loss,
    classification_loss,
    kd_loss,
    psa_cosine_sum,
    psa_loss,
)
from .methods import (
    DISTILL_METHODS,
    METHODS,
    BufferConfig,
    MethodSpec,
    ObjectiveContext,
    method_objective,
)

__all__ = [
    "BufferConfig",
    "DISTILL_METHODS",
    "ImportanceMap",
    "LossWeights",
    "METHODS",
    "MemoryBuffer",
    "MethodSpec",
    "ObjectiveContext",
    "STRATEGIES",
    "ad_loss",
    "buffer_insert",
    "buffer_sample",
    "cade_loss",
    "classification_loss",
    "estimate_fisher",
    "kd_loss",
    "mas_importance",
    "method_objective",
    "psa_cosine_sum",
    "psa_loss",
    "quadratic_penalty",
]
