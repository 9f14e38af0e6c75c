"""Price dynamics of a two-region trade game with local dominance."""

from .errors import (BitradeError, ConfigError, DegeneratePrice, DomainError,
                     InfeasibleProfile, NoConvergence, NonFinite, OrientationViolated,
                     PreconditionViolated)
from .model import EPS, ModelParams, PriceState, StrategyProfile
from .zones import Boundary, CaseRelation, DeltaPBranch, Zone, classify, delta_p_branch
from .equilibrium import EquilibriumResult, best_reply_1, best_reply_2, solve_nash

__version__ = "0.1.0"

__all__ = [
    "BitradeError", "ConfigError", "DegeneratePrice", "DomainError", "InfeasibleProfile",
    "NoConvergence", "NonFinite", "OrientationViolated", "PreconditionViolated",
    "EPS", "ModelParams", "PriceState", "StrategyProfile",
    "Boundary", "CaseRelation", "DeltaPBranch", "Zone", "classify", "delta_p_branch",
    "EquilibriumResult", "best_reply_1", "best_reply_2", "solve_nash",
    "__version__",
]
