"""Level-set functionals, Schwarz symmetrization and a radial p-Laplace branch solver."""

from ._accel import backend
from .fields import CartesianField, RadialField, distribution, lp_norm, truncate

__all__ = ["CartesianField", "RadialField", "backend", "distribution", "lp_norm", "truncate"]
__version__ = "0.1.0"
