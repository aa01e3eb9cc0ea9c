"""Reward centroids for generalizing demonstrated behavior in tabular MDPs."""

from .errors import DomainError, InfeasibleConstraintError
from .geometry import BIRL, MCE, OPT, BehaviorModel, BoundedSetParams
from .mdp import (
    OccupancyMeasure,
    PolicyTable,
    RewardTable,
    SoftValueFunctions,
    TabularMdp,
    ValueFunctions,
)

__all__ = [
    "BIRL",
    "MCE",
    "OPT",
    "BehaviorModel",
    "BoundedSetParams",
    "DomainError",
    "InfeasibleConstraintError",
    "OccupancyMeasure",
    "PolicyTable",
    "RewardTable",
    "SoftValueFunctions",
    "TabularMdp",
    "ValueFunctions",
]

__version__ = "0.1.0"
