"""Dense float64 kernel: layers, parameter storage, Adam, gradient checks."""
from .layers import (
    Matrix,
    affine,
    affine_backward,
    he_normal,
    logistic_loss_with_logit,
    relu,
    relu_backward,
    residual_add,
    residual_add_backward,
    softmax,
    softmax_backward,
    squared_loss,
)
from .store import ParamStore
from .optim import AdamState, adam_step, clip_grad_norm
from .gradcheck import GradCheckReport, finite_diff_check, relative_error

__all__ = [
    "Matrix",
    "affine",
    "affine_backward",
    "he_normal",
    "logistic_loss_with_logit",
    "relu",
    "relu_backward",
    "residual_add",
    "residual_add_backward",
    "softmax",
    "softmax_backward",
    "squared_loss",
    "ParamStore",
    "AdamState",
    "adam_step",
    "clip_grad_norm",
    "GradCheckReport",
    "finite_diff_check",
    "relative_error",
]
