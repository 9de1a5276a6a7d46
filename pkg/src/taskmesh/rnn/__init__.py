from .model import (ModelDims, TaskModel, decode_state, evaluate, forward_step,
                    init_hidden, load_checkpoint, new_model, rollout,
                    rollout_batch, save_checkpoint)
from .train import TrainConfig, loss_and_grads, train

__all__ = [
    "ModelDims", "TaskModel", "decode_state", "evaluate", "forward_step",
    "init_hidden", "load_checkpoint", "new_model", "rollout", "rollout_batch",
    "save_checkpoint", "TrainConfig", "loss_and_grads", "train",
]
