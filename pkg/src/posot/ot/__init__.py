"""Discrete optimal transport and transport-based feature maps."""

from .mapping import (
    AdaptationModel,
    barycentric_map,
    fit_adaptation,
    fit_barycentric,
    fit_gaussian_mapping,
    median_bandwidth,
    transform,
)
from .solvers import (
    CostMatrix,
    DiscreteDistribution,
    TransportPlan,
    cost_matrix,
    normalize_weights,
    solve_emd,
    solve_sinkhorn,
    transport_cost,
)

__all__ = [
    "AdaptationModel", "CostMatrix", "DiscreteDistribution", "TransportPlan",
    "barycentric_map", "cost_matrix", "fit_adaptation", "fit_barycentric",
    "fit_gaussian_mapping", "median_bandwidth", "normalize_weights", "solve_emd",
    "solve_sinkhorn", "transform", "transport_cost",
]
