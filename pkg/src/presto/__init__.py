"""Predict when a parametric DTMC will start violating its requirements.

Closed-form expressions are computed once per requirement by state
elimination; at runtime, forecast parameter values are pushed through them.
"""
__version__ = "0.1.0"

from .engine import PmcExpression, check, check_all
from .forecast import ForecasterSpec, fit, forecast
from .model import Pdtmc, RewardStructure, fruit_picking_model, validate
from .modelformat import load_model, parse_model, serialize_model
from .oracle import oracle_solve
from .predictor import ObservationSeries, PredictionResult, classify, predict
from .properties import Requirement, parse_properties, parse_property
from .ratfunc import Polynomial, RationalFunction, parse_expression

__all__ = [
    "ForecasterSpec", "ObservationSeries", "Pdtmc", "PmcExpression", "Polynomial",
    "PredictionResult", "RationalFunction", "Requirement", "RewardStructure",
    "check", "check_all", "classify", "fit", "forecast", "fruit_picking_model",
    "load_model", "oracle_solve", "parse_expression", "parse_model", "parse_properties",
    "parse_property", "predict", "serialize_model", "validate",
]
