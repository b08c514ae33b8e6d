from .adam import AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import gradient_check
from .model import Model, ModelConfig, count_params, init_model
from .train import TrainConfig, TrainResult, train

__all__ = [
    "AdamState",
    "adam_step",
    "load_checkpoint",
    "save_checkpoint",
    "gradient_check",
    "Model",
    "ModelConfig",
    "count_params",
    "init_model",
    "TrainConfig",
    "TrainResult",
    "train",
]
