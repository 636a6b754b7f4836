"""Littlewood-Paley and Besov tools, explicit constructions and a rotating Euler solver."""

from .grid import BesovParams, Field, Grid, GridSpec, create_grid, get_preset
from .littlewood_paley import FilterBank, besov_norm, build_filter_bank, dyadic_block, homogeneous_besov_norm
from .leray import complement, project, riesz
from .constructions import build_fn, build_gn, build_profile, build_series, build_theta, perp_grad
from .solver import SolverConfig, Trajectory, linear_propagator, solve, step_rk4, v0
from .experiments import ExperimentConfig, ExperimentReport, run_check_suite, run_experiment

__version__ = "0.1.0"

__all__ = [
    "BesovParams",
    "ExperimentConfig",
    "ExperimentReport",
    "Field",
    "FilterBank",
    "Grid",
    "GridSpec",
    "SolverConfig",
    "Trajectory",
    "besov_norm",
    "build_filter_bank",
    "build_fn",
    "build_gn",
    "build_profile",
    "build_series",
    "build_theta",
    "complement",
    "create_grid",
    "dyadic_block",
    "get_preset",
    "homogeneous_besov_norm",
    "linear_propagator",
    "perp_grad",
    "project",
    "riesz",
    "run_check_suite",
    "run_experiment",
    "solve",
    "step_rk4",
    "v0",
]
