"""Kinetic, half-moment and wave models on networks with layer-derived node coupling."""

from .topology import (Condition, CouplingKind, Network, Scenario, ScenarioError, VelocityModel, load_scenario,
                       parse_scenario, uniform_matrix, with_overrides)
from .coupling import invariant_coefficient, solve_node, solve_node_invariant
from .kinetic import KineticSolver, run_kinetic
from .halfmoment import HalfMomentSolver, run_halfmoment
from .wave import WaveSolver, run_wave
from .halfspace import albedo_fixpoint_node, extrapolation_length, kinetic_halfspace_numeric

__version__ = "0.1.0"

__all__ = [
    "Condition", "CouplingKind", "Network", "Scenario", "ScenarioError", "VelocityModel", "load_scenario",
    "parse_scenario", "uniform_matrix", "with_overrides", "invariant_coefficient", "solve_node",
    "solve_node_invariant", "KineticSolver", "run_kinetic", "HalfMomentSolver", "run_halfmoment", "WaveSolver",
    "run_wave", "albedo_fixpoint_node", "extrapolation_length", "kinetic_halfspace_numeric",
]
