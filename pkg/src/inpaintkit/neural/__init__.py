"""From-scratch differentiable hourglass network and per-image training.

Everything runs in float64 numpy with hand-written backward passes, each
validated against central finite differences. No learned weights enter
from outside: the generator is trained per image, and the style-loss
feature extractor uses fixed random weights.
"""

from inpaintkit.neural.tensor import Tensor
from inpaintkit.neural.net import NetConfig, NetParams, net_backward, net_forward, parameter_count
from inpaintkit.neural.losses import dip_loss, gram_matrix, masked_mse
from inpaintkit.neural.optim import rmsprop_step
from inpaintkit.neural.train import (
    DipParams,
    EarlyStop,
    StyleParams,
    TrainError,
    TrainHistory,
    TrainPoint,
    TrainResult,
    dip_train,
    dipst_train,
)
from inpaintkit.neural.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor",
    "NetConfig",
    "NetParams",
    "net_forward",
    "net_backward",
    "parameter_count",
    "masked_mse",
    "dip_loss",
    "gram_matrix",
    "rmsprop_step",
    "DipParams",
    "EarlyStop",
    "StyleParams",
    "TrainError",
    "TrainHistory",
    "TrainPoint",
    "TrainResult",
    "dip_train",
    "dipst_train",
    "save_checkpoint",
    "load_checkpoint",
]
