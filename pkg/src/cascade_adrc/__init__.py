"""ADRC with a cascade extended state observer for a DC-DC buck converter."""

from .controller import ControllerConfig, control
from .errors import ConfigError, ObserverDivergence
from .observer import (CascadeObserver, ExtendedEstimate, ObserverConfig, gains_for_level,
                       observer_derivatives, observer_step, select_estimate)
from .plant import PlantParams, PlantState, derivatives, total_disturbance_truth
from .signals import (DisturbanceProfile, NoiseConfig, ReferenceConfig, Segment,
                      disturbance_at, noise_sample, reference_at)
from .simloop import SimConfig, SimRecord, SimResult, lpf_step, run

__all__ = [
    "CascadeObserver", "ConfigError", "ControllerConfig", "DisturbanceProfile",
    "ExtendedEstimate", "NoiseConfig", "ObserverConfig", "ObserverDivergence",
    "PlantParams", "PlantState", "ReferenceConfig", "Segment", "SimConfig", "SimRecord",
    "SimResult", "control", "derivatives", "disturbance_at", "gains_for_level",
    "lpf_step", "noise_sample", "observer_derivatives", "observer_step", "reference_at",
    "run", "select_estimate", "total_disturbance_truth",
]
