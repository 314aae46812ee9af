"""Metastable energy-landscape analysis for overdamped diffusions.

Given a potential H and temperature eps, the package locates the critical
points, splits the Gibbs measure into basins, evaluates the sharp
metastable predictions for the Poincare and log-Sobolev constants with
their pre-exponential factors, and validates them against independent
grid oracles (finite-difference spectral gaps, capacity-type functionals,
explicit transport constructions).
"""

from .expr import Potential, parse_potential
from .landscape import Box, find_critical_points, saddle_graph
from .measures import GibbsSpec, laplace_partition, quadrature_partition

__all__ = [
    "Potential", "parse_potential", "Box", "find_critical_points",
    "saddle_graph", "GibbsSpec", "laplace_partition", "quadrature_partition",
]

__version__ = "0.1.0"
