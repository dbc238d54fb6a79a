"""Hyperbolic metric densities, the quantities C and C-hat, and spherical convexity."""

from .convexity import (
    find_euclidean_nonconvexity_witness,
    find_spherical_nonconvexity_witness,
    is_euclidean_convex,
    is_spherically_convex,
    verify_keogh_witness,
    verify_witness,
)
from .domains import CircularDomain, GeneralizedCircle, GridDomain, Lune, SphericalDisk
from .metric_exact import density_for
from .metric_pde import PDEDensity, refine_and_extrapolate, solve
from .quantities import estimate_C, estimate_Chat, estimate_Chat_chain
from .sphere_geom import INFINITY, SphericalIsometry, chordal_sigma, pseudo_tau, spherical_theta

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "CircularDomain", "GeneralizedCircle", "GridDomain", "Lune", "PDEDensity",
    "SphericalDisk", "SphericalIsometry", "chordal_sigma", "density_for", "estimate_C",
    "estimate_Chat", "estimate_Chat_chain", "find_euclidean_nonconvexity_witness",
    "find_spherical_nonconvexity_witness", "is_euclidean_convex", "is_spherically_convex",
    "pseudo_tau", "refine_and_extrapolate", "solve", "spherical_theta", "verify_keogh_witness",
    "verify_witness",
]
