"""Conditional graph entropy by alternating minimisation."""

__version__ = "0.1.0"

from .model import Graph, Problem, ProblemError, enumerate_maximal_independent_sets, load_problem
from .geometry import APoint, QPoint, RPoint, uniform_interior_q, perturbed_interior_q
from .solver import SolveReport, SolverConfig, entropy_conditional, entropy_unconditioned, solve
from .optimality import Verdict, check_fixed_point
from .corner import CornerQuery, corner_entropy, max_entropy_distribution, tau

__all__ = [
    "APoint", "CornerQuery", "Graph", "Problem", "ProblemError", "QPoint", "RPoint",
    "SolveReport", "SolverConfig", "Verdict", "check_fixed_point", "corner_entropy",
    "entropy_conditional", "entropy_unconditioned", "enumerate_maximal_independent_sets",
    "load_problem", "max_entropy_distribution", "perturbed_interior_q", "solve", "tau",
    "uniform_interior_q",
]
