"""Multi-model geometric fitting with weak-annotation guided proposal sampling."""

from .dataio import (Dataset, generate_synthetic_scene, load_annotations, load_dataset, preset_config,
                     save_annotations, save_dataset, segmentation_error, simulate_weak_annotations)
from .fitter import FitConfig, FitResult, InfeasibleAnnotation, fit, sa_rcm_config
from .geometry import Correspondence, DegenerateSample, ModelHypothesis, ModelKind
from .graph import WeakAnnotation, build_adjacency
from .optimize import EnergyParams, PearlConfig, alpha_expansion, energy, pearl_fit
from .runner import METHODS, RunReport, benchmark, run_method

__version__ = "0.1.0"

__all__ = [
    "Correspondence", "Dataset", "DegenerateSample", "EnergyParams", "FitConfig", "FitResult",
    "InfeasibleAnnotation", "METHODS", "ModelHypothesis", "ModelKind", "PearlConfig", "RunReport",
    "WeakAnnotation", "alpha_expansion", "benchmark", "build_adjacency", "energy", "fit",
    "generate_synthetic_scene", "load_annotations", "load_dataset", "pearl_fit", "preset_config",
    "run_method", "sa_rcm_config", "save_annotations", "save_dataset", "segmentation_error",
    "simulate_weak_annotations",
]
