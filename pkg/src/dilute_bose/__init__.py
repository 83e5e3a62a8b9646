"""Desk-scale laboratory for dilute Bose gas trial states.

Scattering data of compactly supported radial potentials, ideal-gas
thermodynamics, a bosonic Fock engine on momentum lattices, pair-excitation
trial states, fixed-particle-number Gibbs mixtures and the periodic to
Dirichlet bridge.
"""
from .errors import (ConfigError, ConstructionError, DomainError, InvalidPotentialError, QuadratureError,
                     SizeError)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = ["ConfigError", "ConstructionError", "DomainError", "InvalidPotentialError", "QuadratureError",
           "SizeError", "DEFAULT", "Tolerances", "__version__"]
