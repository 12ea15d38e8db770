"""The four training-loss components and their weighted combination.

All teacher-side inputs are coerced to plain arrays, so gradients can
only ever flow into the student's graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    Tensor,
    abs_,
    add,
    cosine_similarity,
    l2_normalize,
    log_sigmoid,
    mul,
    scale,
    softmax_cross_entropy,
    sub,
    sum_,
)

Array = np.ndarray


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 2.0      # knowledge distillation
    beta: float = 0.1       # attention distillation
    gamma: float = 0.5      # positive-sample alignment

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"loss weight {name} must be finite and >= 0")


def _teacher_array(x, what: str) -> Array:
    """Detach teacher-side inputs; they are constants in every loss."""
    arr = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite teacher values")
    return arr


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def classification_loss(logits: Tensor, labels) -> Tensor:
    """Mean softmax cross-entropy of [N, 2] logits vs {0, 1} labels."""
    return softmax_cross_entropy(logits, labels)


def kd_loss(teacher_logits, student_logits) -> Tensor:
    """-sum_i sigmoid(y_i) * log sigmoid(y_hat_i), averaged over the batch.

    Each sample contributes its full per-class logit vector; a 1-D input
    is treated as a single sample.
    """
    student = student_logits if isinstance(student_logits, Tensor) \
        else Tensor(student_logits)
    t = _teacher_array(teacher_logits, "kd_loss")
    if t.ndim == 1:
        t = t[None, :]
    s = student if student.data.ndim == 2 else student.reshape((1, -1))
    if t.shape != s.shape:
        raise ValueError(f"kd_loss: teacher {t.shape} vs student {s.shape}")
    n = s.shape[0]
    weighted = mul(Tensor(_sigmoid(t)), log_sigmoid(s))
    return scale(sum_(weighted), -1.0 / n)


def _normalize_rows(a: Array) -> Array:
    norms = np.sqrt((a * a).sum(axis=-1, keepdims=True))
    return np.where(norms > 0.0, a / np.where(norms > 0.0, norms, 1.0), 0.0)


def _as_map_rows(x, what: str):
    """AttentionMap, array, or Tensor -> (Tensor | Array) with shape [N, l]."""
    from ..model.gradcam import AttentionMap
    if isinstance(x, AttentionMap):
        x = x.values
    if isinstance(x, Tensor):
        return x if x.data.ndim == 2 else x.reshape((1, -1))
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{what}: need vectors or [N, l] rows, got {arr.shape}")
    return arr


def ad_loss(q_teacher, q_student) -> Tensor:
    """L1 distance between L2-normalized attention maps, batch-averaged.

    Zero-norm maps normalize to the zero vector.
    """
    s = _as_map_rows(q_student, "ad_loss")
    if not isinstance(s, Tensor):
        s = Tensor(s)
    t = _teacher_array(_as_map_rows(q_teacher, "ad_loss"), "ad_loss")
    if t.shape != s.shape:
        raise ValueError(f"ad_loss: teacher {t.shape} vs student {s.shape}")
    diff = abs_(sub(l2_normalize(s, axis=-1), Tensor(_normalize_rows(t))))
    return scale(sum_(diff), 1.0 / s.shape[0])


def psa_loss(teacher_taps, student_taps, positive_mask) -> Tensor:
    """Sum over tap layers of the mean (1 - cos) over positive samples.

    Returns exactly 0 when the batch has no positive samples.
    """
    mask = np.asarray(positive_mask, dtype=bool)
    if mask.ndim != 1:
        raise ValueError("psa_loss: positive_mask must be 1-D")
    t_ids = [tid for tid, _ in teacher_taps]
    s_ids = [tid for tid, _ in student_taps]
    if t_ids != s_ids:
        raise ValueError(f"psa_loss: tap layers {t_ids} vs {s_ids}")
    n_pos = int(mask.sum())
    if n_pos == 0:
        return Tensor(np.asarray(0.0))
    maskf = mask.astype(np.float64)
    total: Tensor | None = None
    for (tid, te), (_, se) in zip(teacher_taps, student_taps):
        s = se if isinstance(se, Tensor) else Tensor(se)
        t = _teacher_array(te, f"psa_loss[{tid}]")
        if t.shape != s.shape:
            raise ValueError(f"psa_loss: {tid} teacher {t.shape} vs "
                             f"student {s.shape}")
        if mask.shape != (s.shape[0],):
            raise ValueError("psa_loss: mask length does not match batch")
        cos = cosine_similarity(Tensor(t), s, axis=-1)
        picked = sum_(mul(cos, Tensor(maskf)))
        layer = sub(Tensor(np.asarray(float(n_pos))), picked)
        total = layer if total is None else add(total, layer)
    return scale(total, 1.0 / n_pos)


def psa_cosine_sum(teacher_taps, student_taps, positive_mask) -> float:
    """Diagnostic: the raw summed positive-sample cosine similarity."""
    mask = np.asarray(positive_mask, dtype=bool)
    total = 0.0
    for (tid, te), (_, se) in zip(teacher_taps, student_taps):
        t = _teacher_array(te, f"psa_cosine_sum[{tid}]")[mask]
        s = np.asarray(se.data if isinstance(se, Tensor) else se)[mask]
        tn, sn = _normalize_rows(t), _normalize_rows(s)
        total += float((tn * sn).sum())
    return total


def cade_loss(l_c: Tensor, l_kd: Tensor | None, l_ad: Tensor | None,
              l_psa: Tensor | None, w: LossWeights) -> Tensor:
    """l_c + alpha*l_kd + beta*l_ad + gamma*l_psa.

    Zero-weighted terms are skipped outright, so with all weights zero the
    result is the classification loss itself, bit for bit.
    """
    out = l_c
    for term, weight in ((l_kd, w.alpha), (l_ad, w.beta), (l_psa, w.gamma)):
        if weight != 0.0:
            if term is None:
                raise ValueError("cade_loss: weighted component missing")
            out = add(out, scale(term, weight))
    return out
