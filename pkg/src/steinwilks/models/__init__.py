"""Built-in models and the string-id registry."""

from __future__ import annotations

from ..contract import get_model, register_model, registered_models
from .base import LRTResult, batch_statistics_generic, fit_mle, neg2_log_lambda
from .exponential import ExponentialModel
from .logistic import LogisticModel
from .normal import NormalModel

register_model(lambda **kw: ExponentialModel(), "exponential")
register_model(lambda **kw: NormalModel(), "normal")
register_model(lambda **kw: LogisticModel(**kw), "logistic")

__all__ = [
    "ExponentialModel",
    "NormalModel",
    "LogisticModel",
    "LRTResult",
    "fit_mle",
    "neg2_log_lambda",
    "batch_statistics_generic",
    "get_model",
    "register_model",
    "registered_models",
]
