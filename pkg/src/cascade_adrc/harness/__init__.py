"""Experiment configs, multi-run orchestration and output files."""

from .cli import main
from .config import (EXPERIMENT_IDS, SWEEP_AXES, ExperimentSpec, ObserverSettings, RunSpec,
                     load_preset, load_spec, spec_from_dict)
from .runner import ExperimentResult, RunOutcome, emit_bode, execute_run, run_experiment

__all__ = ["EXPERIMENT_IDS", "SWEEP_AXES", "ExperimentResult", "ExperimentSpec", "ObserverSettings",
           "RunOutcome", "RunSpec", "emit_bode", "execute_run", "load_preset", "load_spec", "main",
           "run_experiment", "spec_from_dict"]
