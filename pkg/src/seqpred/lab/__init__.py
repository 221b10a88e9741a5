"""Experiment registry, report emission and the command-line interface."""

from .experiments import REGISTRY, ExperimentResult, ExperimentSpec, run_experiment

__all__ = ["REGISTRY", "ExperimentResult", "ExperimentSpec", "run_experiment"]
