from src.nn.autograd import Param, Tensor, backward, constant, cross_entropy_row, param
from src.nn.checkpoint import load_params, save_params
from src.nn.optim import AdamState, adam_step
from src.nn.params import ModelParams

__all__ = [
    "AdamState",
    "ModelParams",
    "Param",
    "Tensor",
    "adam_step",
    "backward",
    "constant",
    "cross_entropy_row",
    "load_params",
    "param",
    "save_params",
]
