"""Feature-map lists to network-ready arrays."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..features import FeatureMap

Array = np.ndarray


def batch_from_maps(maps: Sequence[FeatureMap]) -> Array:
    """Stack utterances as a [N, 1, coeffs, frames] batch.

    Feature matrices are stored frames x coeffs; the network wants the
    coefficient axis as image height, so each one is transposed.
    """
    if not maps:
        raise ValueError("cannot build a batch from zero feature maps")
    shape = maps[0].features.shape
    for m in maps:
        if m.features.shape != shape:
            raise ValueError(f"batch mixes feature shapes {shape} and "
                             f"{m.features.shape}")
    return np.stack([m.features.T for m in maps])[:, None]


def labels_from_maps(maps: Sequence[FeatureMap]) -> Array:
    return np.array([m.label for m in maps], dtype=np.int64)
