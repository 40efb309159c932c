"""Densities of permutations with restricted cycle lengths and their asymptotics."""

__version__ = "0.1.0"

from .errors import AccuracyError, DomainError, ResourceLimitError, ShortCyclesError
from .exact import brute_force_density, density_table, harmonic, kappa_exact, nu_exact
from .special import omega, rho, solve_delay_ode
from .asymptotics import approximate, error_ratio_scan, measure
from .saddle import kappa_contour
from .tvd import nu_tail, tv_exact
from .montecarlo import estimate_density, sample_cycle_counts

__all__ = [
    "AccuracyError", "DomainError", "ResourceLimitError", "ShortCyclesError",
    "brute_force_density", "density_table", "harmonic", "kappa_exact", "nu_exact",
    "omega", "rho", "solve_delay_ode",
    "approximate", "error_ratio_scan", "measure",
    "kappa_contour", "nu_tail", "tv_exact",
    "estimate_density", "sample_cycle_counts",
]
