"""From-scratch CNN toolkit for four-class kidney CT classification.

Preprocessing, SMOTE balancing, a three-stage conv net trained with Adam,
evaluation metrics and Grad-CAM explanations, all on numpy.
"""
from .imgdata import CLASS_NAMES, LabeledSet
from .nn import Model, TrainConfig, build_model, fit, predict_proba

__version__ = "0.1.0"

__all__ = ["CLASS_NAMES", "LabeledSet", "Model", "TrainConfig", "build_model", "fit",
           "predict_proba"]
