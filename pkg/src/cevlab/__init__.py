"""Option pricing and well-posedness diagnostics for the CEV model ``dF = sigma F^alpha dW``."""

from .transforms import (
    DomainError,
    GrowthClass,
    ModelParams,
    Verdict,
    classify_boundary,
    nu_of_alpha,
    uniqueness_verdict,
    x_to_y,
    y_to_x,
)
from .pricer import Payoff, PriceResult, QuadratureConfig, price_convolution
from .fdsolver import BoundaryPolicy, GridSpec, SolutionSurface, solve
from .mc import MCConfig, MCEstimate, simulate_terminal

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "GrowthClass",
    "ModelParams",
    "Verdict",
    "classify_boundary",
    "nu_of_alpha",
    "uniqueness_verdict",
    "x_to_y",
    "y_to_x",
    "Payoff",
    "PriceResult",
    "QuadratureConfig",
    "price_convolution",
    "BoundaryPolicy",
    "GridSpec",
    "SolutionSurface",
    "solve",
    "MCConfig",
    "MCEstimate",
    "simulate_terminal",
]
