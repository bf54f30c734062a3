"""Offline change-point detection: costs and search methods."""

from .costs import (
    COSTS,
    Cost,
    CostCosine,
    CostL2,
    CostLinear,
    CostLinearKernel,
    CostRbf,
    as_signal,
    cost_cosine,
    cost_l2,
    cost_linear,
    cost_rbf,
    get_cost,
    median_heuristic_gamma,
)
from .search import (
    METHODS,
    MIN_SIZE,
    default_penalty,
    detect,
    detect_binseg,
    detect_bottomup,
    detect_kernelcpd,
    detect_pelt,
)

__all__ = [
    "COSTS", "Cost", "CostCosine", "CostL2", "CostLinear", "CostLinearKernel", "CostRbf",
    "as_signal", "cost_cosine", "cost_l2", "cost_linear", "cost_rbf", "get_cost",
    "median_heuristic_gamma", "METHODS", "MIN_SIZE", "default_penalty", "detect",
    "detect_binseg", "detect_bottomup", "detect_kernelcpd", "detect_pelt",
]
