"""Spectral kernels, solution operators and parabolic BMO / L_p estimate checks."""
from .spectral import SpaceTimeField, SpectralGrid
from .symbols import RoughCoefficient, Symbol, catalog, eval_symbol, integrate_symbol

__all__ = [
    "RoughCoefficient",
    "SpaceTimeField",
    "SpectralGrid",
    "Symbol",
    "catalog",
    "eval_symbol",
    "integrate_symbol",
]
__version__ = "0.1.0"
