"""Closed sub-Riemannian geodesics on PSL2(R) quotients and near closed Reeb orbits."""
from ._accel import NUMBA_ENABLED, backend
from .errors import NumericalError, SRGeodesicsError, ValidationError

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "backend", "NumericalError", "SRGeodesicsError", "ValidationError"]
