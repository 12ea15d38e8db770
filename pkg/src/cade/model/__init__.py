from .checkpoint import load_checkpoint, save_checkpoint, snapshot
from .gradcam import (
    AttentionMap,
    activation_gradients,
    attention_map_graph,
    gradcam,
)
from .net import (
    ConvBlock,
    ForwardResult,
    Model,
    ModelConfig,
    default_config,
    forward,
    forward_with_taps,
    init_model,
    param_spec,
    run_block,
    run_from_block,
    run_head,
)

__all__ = [
    "AttentionMap",
    "ConvBlock",
    "ForwardResult",
    "Model",
    "ModelConfig",
    "activation_gradients",
    "attention_map_graph",
    "default_config",
    "forward",
    "forward_with_taps",
    "gradcam",
    "init_model",
    "load_checkpoint",
    "param_spec",
    "run_block",
    "run_from_block",
    "run_head",
    "save_checkpoint",
    "snapshot",
]
