"""Numerical laboratory for the Ooguri-Vafa hyperkaehler space and its SYZ mirror."""

from .base_geometry import BasePoint, Charge, ModelParams
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    OVError,
    PositivityError,
    RayProximityError,
    SingularFactorError,
    StencilError,
)
from .gibbons_hawking import SpacePoint
from .numerics import FiniteDifferenceSpec, FormValue, QuadratureSpec

__all__ = [
    "BasePoint",
    "Charge",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "FiniteDifferenceSpec",
    "FormValue",
    "ModelParams",
    "OVError",
    "PositivityError",
    "QuadratureSpec",
    "RayProximityError",
    "SingularFactorError",
    "SpacePoint",
    "StencilError",
]

__version__ = "0.1.0"
