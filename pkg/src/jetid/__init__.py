"""Identify parameters and initial states of autonomous ODEs from output jets."""
from .core import (
    IdentificationReport,
    JetSeries,
    Model,
    OutputJet,
    ParameterMap,
    PointwiseRatio,
    RegressionBlock,
    SystemSpec,
    build_model,
    get_model,
    list_models,
    register_model,
)
from .recovery import IdentifyConfig, identify
from .simulate import sample_outputs, simulate_jets

__version__ = "0.1.0"

__all__ = [
    "IdentificationReport",
    "IdentifyConfig",
    "JetSeries",
    "Model",
    "OutputJet",
    "ParameterMap",
    "PointwiseRatio",
    "RegressionBlock",
    "SystemSpec",
    "build_model",
    "get_model",
    "identify",
    "list_models",
    "register_model",
    "sample_outputs",
    "simulate_jets",
]
