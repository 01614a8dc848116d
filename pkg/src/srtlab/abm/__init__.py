"""Agent-based economy with households, firms and banks on four markets."""

from .config import TAX_MODES, ModelConfig
from .model import RunResult, StepResult, simulate, step
from .resolution import CascadeReport, cascade_fixed_point
from .state import EconomyState, init_state

__all__ = [
    "TAX_MODES", "ModelConfig", "RunResult", "StepResult", "simulate", "step",
    "CascadeReport", "cascade_fixed_point", "EconomyState", "init_state",
]
