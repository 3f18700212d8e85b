"""Finite-difference graphical mean curvature flow in higher codimension.

Submodules: ``geometry`` (pointwise graph geometry), ``torus`` and
``sphere`` (solvers), ``verifier`` (identity residuals and run monitors),
``density`` (Gaussian density probes), ``cli`` (command line).
"""

from .errors import BlowupError, ConfigurationError, DomainError, InsufficientSamplesError, PreconditionError
from .geometry import ManifoldSpec

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ConfigurationError",
    "DomainError",
    "InsufficientSamplesError",
    "ManifoldSpec",
    "PreconditionError",
]
