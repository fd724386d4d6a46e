"""Automatic per-layer quantization bitwidth discovery for small networks.

A PPO agent walks the layers of a pretrained network, choosing one
bitwidth per layer; rewards combine an analytical cost model with
short-finetune accuracy estimates, and discovered solutions can be
checked against an exhaustively enumerated Pareto frontier.
"""

from .backends import BACKEND
from .cost import CostParams, QuantAssignment, energy_estimate, layer_cost, speedup_estimate, state_of_quantization
from .env import QuantEnv, RewardParams, SearchResult, compute_reward, run_search
from .pareto import ParetoPoint, enumerate_space, is_dominated, pareto_frontier, validate_solution

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CostParams",
    "ParetoPoint",
    "QuantAssignment",
    "QuantEnv",
    "RewardParams",
    "SearchResult",
    "compute_reward",
    "energy_estimate",
    "enumerate_space",
    "is_dominated",
    "layer_cost",
    "pareto_frontier",
    "run_search",
    "speedup_estimate",
    "state_of_quantization",
    "validate_solution",
]
