from .tensor import (
    Tensor,
    Gradients,
    backward,
    add,
    sub,
    mul,
    scale,
    neg,
    abs_,
    log,
    relu,
    leaky_relu,
    sigmoid,
    log_sigmoid,
    sum_,
    mean,
    dot,
    l2_norm,
    l2_normalize,
    cosine_similarity,
    softmax_cross_entropy,
    reshape,
    matmul,
    dense,
    conv2d,
    maxpool2d,
    global_avg_pool,
)
from .numeric import numeric_gradient, relative_error
from .optim import ParameterStore, OptimizerConfig, Optimizer

__all__ = [
    "Tensor", "Gradients", "backward",
    "add", "sub", "mul", "scale", "neg", "abs_", "log",
    "relu", "leaky_relu", "sigmoid", "log_sigmoid",
    "sum_", "mean", "dot", "l2_norm", "l2_normalize",
    "cosine_similarity", "softmax_cross_entropy", "reshape",
    "matmul", "dense", "conv2d", "maxpool2d", "global_avg_pool",
    "numeric_gradient", "relative_error",
    "ParameterStore", "OptimizerConfig", "Optimizer",
]
