"""Scenario reduction with certified approximation guarantees for distributionally robust optimization."""
from .clustering import (
    Partition,
    guarantee_of,
    hyperrect_partition,
    kmeans_partition,
    optimal_partition,
    optimal_representative,
)
from .ambiguity import AggregationMatrix, Box, Ellipsoid, Simplex, from_samples, project, worst_case_expectation
from .dro import DroInstance, DroSolution, MetricsReport, evaluate_solution, reduce_and_solve, solve
from .scenarios import MatrixScenarioSet, ScenarioSet

__version__ = "0.1.0"

__all__ = [
    "AggregationMatrix", "Box", "DroInstance", "DroSolution", "Ellipsoid", "MatrixScenarioSet", "MetricsReport",
    "Partition", "ScenarioSet", "Simplex", "evaluate_solution", "from_samples", "guarantee_of",
    "hyperrect_partition", "kmeans_partition", "optimal_partition", "optimal_representative", "project",
    "reduce_and_solve", "solve", "worst_case_expectation",
]
