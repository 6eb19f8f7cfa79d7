from .functional import (conv2d_backward, conv2d_forward, dense_backward, dense_forward,
                         finite_diff_grad, maxpool2x2_backward, maxpool2x2_forward, relu,
                         relu_backward, softmax, sparse_ce_loss)
from .layers import ConvLayer, DenseLayer, Flatten, MaxPool2x2, ReLU, Softmax
from .model import Model, build_model, build_paper_model, predict_proba
from .optim import AdamState, adam_step
from .train import TrainConfig, TrainHistory, evaluate, fit

__all__ = [
    "AdamState", "ConvLayer", "DenseLayer", "Flatten", "MaxPool2x2", "Model", "ReLU",
    "Softmax", "TrainConfig", "TrainHistory", "adam_step", "build_model", "build_paper_model",
    "conv2d_backward", "conv2d_forward", "dense_backward", "dense_forward", "evaluate",
    "finite_diff_grad", "fit", "maxpool2x2_backward", "maxpool2x2_forward", "predict_proba",
    "relu", "relu_backward", "softmax", "sparse_ce_loss",
]
