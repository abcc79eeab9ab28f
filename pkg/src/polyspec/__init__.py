"""Spectral functions of the Laplacian on mirror-symmetric polytopes.

Exact eigenbases, continuum spectral functions, two-term expansions of
the exchange energy and of semi-local (GGA-type) functionals, and the
integral constraint auditor for enhancement factors.
"""

from .backend import have_compiled
from .geometry import (
    Isometry,
    Lattice,
    Polytope,
    ReflectionGroup,
    make_polytope,
    overlap_first_order,
    overlap_volume,
    polytope_from_descriptor,
    reflection_group,
    sigma_projection,
    strict_tessellation_check,
)
from .quad import (
    QuadratureResult,
    QuadratureSpec,
    integrate_osc_semiinfinite,
    pair_integral_singular,
    qmc_integrate,
)
from .specfun import bessel_j, h, hdot, mu_hat, omega

__version__ = "0.1.0"

__all__ = [
    "Isometry", "Lattice", "Polytope", "ReflectionGroup",
    "make_polytope", "overlap_first_order", "overlap_volume",
    "polytope_from_descriptor", "reflection_group", "sigma_projection",
    "strict_tessellation_check",
    "QuadratureResult", "QuadratureSpec", "integrate_osc_semiinfinite",
    "pair_integral_singular", "qmc_integrate",
    "bessel_j", "h", "hdot", "mu_hat", "omega",
    "have_compiled",
]
