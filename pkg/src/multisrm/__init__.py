"""Multilevel Social Relations Models for directed dyadic data, fitted by MCMC."""
from ._jit import BACKEND
from .analysis import (ConvergenceReport, ParameterSummary, convergence_report,
                       effective_sample_size, split_rhat, summarize)
from .data import (DyadicDataset, ObservationRow, Schema, ValidationReport, Violation,
                   load_dataset, validate, write_dataset)
from .engine import ChainState, PosteriorSamples, init_state, run_chains, step_chain
from .errors import SRMError
from .model import ChainSettings, ModelConfig, ModelPlan, PriorSpec, build_model
from .predict import (PredictionCurve, PredictionScenario, parse_scenario, point_prediction,
                      prediction_curve)
from .simulate import TrueParameters, simulate_dataset
from .srmmath import (EffectState, VarianceComponents, deviance, inverse_link,
                      linear_predictor, log_likelihood, reciprocity, variance_partition)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ChainSettings", "ChainState", "ConvergenceReport", "DyadicDataset",
    "EffectState", "ModelConfig", "ModelPlan", "ObservationRow", "ParameterSummary",
    "PosteriorSamples", "PredictionCurve", "PredictionScenario", "PriorSpec", "SRMError",
    "Schema", "TrueParameters", "ValidationReport", "VarianceComponents", "Violation",
    "build_model", "convergence_report", "deviance", "effective_sample_size", "init_state",
    "inverse_link", "linear_predictor", "load_dataset", "log_likelihood", "parse_scenario",
    "point_prediction", "prediction_curve", "reciprocity", "run_chains", "simulate_dataset",
    "split_rhat", "step_chain", "summarize", "validate", "variance_partition",
    "write_dataset",
]
