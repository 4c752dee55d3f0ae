"""Finite-dimensional numerics for Grassmannians of projections.

Submodules
----------
operators
    Dense operator kernel: norms, weak metric, polar decomposition, Haar sampling.
grassmann
    Certified projections, the neighbourhood ``O_0``, its polar section and geodesic paths.
retraction
    Dyadic compression ``D_t`` on L^2[0, 1], the maps ``phi_t`` and the retraction ``Phi``.
chern
    Lattice first Chern numbers of projection families over meshed surfaces.
states
    Normalised trace states and their continuity certificate.
"""

from . import chern, grassmann, operators, retraction, states
from .errors import GrassError
from .grassmann import GrassmannPoint, Neighbourhood, certify, connect, section
from .operators import DEFAULT_TOL, Tolerances, WeakMetric, op_norm, trace_norm, weak_dist

__version__ = "0.1.0"

__all__ = [
    "chern",
    "grassmann",
    "operators",
    "retraction",
    "states",
    "GrassError",
    "GrassmannPoint",
    "Neighbourhood",
    "certify",
    "connect",
    "section",
    "DEFAULT_TOL",
    "Tolerances",
    "WeakMetric",
    "op_norm",
    "trace_norm",
    "weak_dist",
    "__version__",
]
