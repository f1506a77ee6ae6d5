"""Dynamic pricing of social data in mobile networks with network and congestion effects."""

from .errors import PricingError
from .graph import SocialGraph, generate_er, load_edge_list
from .model import MarketParams, build_matrices, check_assumption1, validate_model
from .sequential import run_sequential, revenue_closed_form, welfare_dynamic
from .simultaneous import run_greedy, solve_simultaneous
from .static import solve_static

__version__ = "0.1.0"

__all__ = [
    "PricingError",
    "SocialGraph",
    "generate_er",
    "load_edge_list",
    "MarketParams",
    "build_matrices",
    "check_assumption1",
    "validate_model",
    "run_sequential",
    "revenue_closed_form",
    "welfare_dynamic",
    "run_greedy",
    "solve_simultaneous",
    "solve_static",
]
