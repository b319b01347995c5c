from .bicubic import bicubic_resample
from .network import Weights, forward, backward, init_weights, identity_weights
from .optim import AdamState, adam_step
from .train import TrainConfig, TrainingDiverged, History, train, evaluate, save_weights, load_weights

__all__ = [
    "bicubic_resample",
    "Weights", "forward", "backward", "init_weights", "identity_weights",
    "AdamState", "adam_step",
    "TrainConfig", "TrainingDiverged", "History", "train", "evaluate",
    "save_weights", "load_weights",
]
