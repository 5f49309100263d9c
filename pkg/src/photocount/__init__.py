"""Photocount statistics: the Bernoulli loss transform, its inverse, and stability analysis."""

from .distributions import (
    PMF,
    CompoundPoissonParams,
    Origin,
    PoissonParams,
    compound_poisson_pmf,
    family_pmf,
    pmf_from_values,
    poisson_pmf,
)
from .errors import PhotocountError
from .montecarlo import SimulationRun, reconstruction_error, simulate
from .simplex import SimplexCheck, contains, contraction_ratio, vertices
from .stability import (
    MnRecord,
    StabilityReport,
    Verdict,
    abel_index,
    analytic_Mn,
    analyze,
    criterion_holds,
    eta_critical,
    find_Mn_empirical,
)
from .transform import (
    SignedDistribution,
    TransformSpec,
    build_matrix,
    forward,
    forward_exact,
    inverse,
    inverse_exact,
    inverse_via_solve,
)

__all__ = [
    "PMF", "Origin", "PoissonParams", "CompoundPoissonParams", "poisson_pmf",
    "compound_poisson_pmf", "family_pmf", "pmf_from_values", "PhotocountError",
    "TransformSpec", "SignedDistribution", "build_matrix", "forward", "forward_exact",
    "inverse", "inverse_exact", "inverse_via_solve", "criterion_holds",
    "find_Mn_empirical", "analytic_Mn", "eta_critical", "abel_index", "analyze",
    "Verdict", "MnRecord", "StabilityReport", "vertices", "contains",
    "contraction_ratio", "SimplexCheck", "simulate", "reconstruction_error",
    "SimulationRun",
]
