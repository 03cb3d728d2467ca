"""Pseudospectral laboratory for semilinear wave equations with derivative nonlinearities."""
from .kernels import BACKEND
from .spectral import FieldState, GridSpec, SpectralField
from .nonlinearity import NonlinearSpec, NonlinearTerm, is_radial, regularity_gate
from .data import DataProfile, make_data
from .timestepper import EvolveConfig, evolve, lifespan_estimate
from .picard import PicardConfig, picard_solve
from .config import load_config
from .experiments import run_experiment

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DataProfile",
    "EvolveConfig",
    "FieldState",
    "GridSpec",
    "NonlinearSpec",
    "NonlinearTerm",
    "PicardConfig",
    "SpectralField",
    "evolve",
    "is_radial",
    "lifespan_estimate",
    "load_config",
    "make_data",
    "picard_solve",
    "regularity_gate",
    "run_experiment",
]
