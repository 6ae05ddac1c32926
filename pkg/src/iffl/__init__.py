"""Incoherent feedforward loop models: simulation, equilibria, sweeps and a CLI."""

__version__ = "0.1.0"

from iffl.equilibria import EquilibriumReport, equilibria, nullclines, switch_lambdas, uniqueness_condition
from iffl.inputs import Constant, Exponential, Linear, Oscillating, Sampled, Step
from iffl.model import FullState, ModelParams, ReducedState, Variant, normalize_params
from iffl.ode import IntegratorConfig, Outcome, Trajectory, integrate, simulate_step_response, w_slope
from iffl.sweep import Axis, Method, SweepSpec, heatmap, lambda_sweep

__all__ = [
    "Axis", "Constant", "EquilibriumReport", "Exponential", "FullState", "IntegratorConfig", "Linear", "Method",
    "ModelParams", "Oscillating", "Outcome", "ReducedState", "Sampled", "Step", "SweepSpec", "Trajectory", "Variant",
    "equilibria", "heatmap", "integrate", "lambda_sweep", "normalize_params", "nullclines", "simulate_step_response",
    "switch_lambdas", "uniqueness_condition", "w_slope",
]
