"""Ruin probabilities for the discrete-time surplus process with unit premiums.

Exact values come from the forward recursion (`psi_recursion`) or, for
negative binomial mixture claims, from the coefficient series (`psi_nbm`).
Mixed Poisson claims get two grid approximations (`psi_mp_method1`,
`psi_mp_method2`) plus an exact reference, and `simulate_paths` provides an
independent Monte Carlo oracle for everything.
"""

from .distributions import (
    DiscretePmf,
    DiscretizationSpec,
    GridBudgetError,
    MixingDistribution,
    NbmSpec,
    QuadratureError,
    discretize_mixing,
    equilibrium,
    erlangm_to_nbm,
    geometric_pmf,
    mp_claims_pmf,
    mp_pmf,
    nb_cdf,
    nb_pmf,
    nb_sf,
    nbm_claims_pmf,
    nbm_equilibrium,
    nbm_pmf,
)
from .mixed_poisson import (
    MpApproxConfig,
    MpCoefficientSeq,
    mp_coefficients,
    psi_mp_exact_reference,
    psi_mp_method1,
    psi_mp_method2,
)
from .nbm import (
    CoefficientSeq,
    NStarSeq,
    cbar_sequence,
    compound_geo_zero_mass,
    nstar_sequence,
    psi_nbm,
)
from .pollaczek import ConvolutionTable, psi_pk, severity_at_zero
from .recursion import (
    CompoundBinomialSpec,
    RuinQuery,
    convert_cb_to_gd,
    convert_gd_to_cb,
    gerber_recursion,
    psi_geometric_closed,
    psi_recursion,
)
from .simulate import (
    GofReport,
    PathStats,
    SimConfig,
    SimResult,
    check_record_count_law,
    check_severity_law,
    simulate_paths,
    simulate_single,
)

__version__ = "0.1.0"

__all__ = [
    "DiscretePmf",
    "NbmSpec",
    "MixingDistribution",
    "DiscretizationSpec",
    "QuadratureError",
    "GridBudgetError",
    "nb_pmf",
    "nb_cdf",
    "nb_sf",
    "nbm_pmf",
    "equilibrium",
    "nbm_equilibrium",
    "mp_pmf",
    "erlangm_to_nbm",
    "discretize_mixing",
    "geometric_pmf",
    "nbm_claims_pmf",
    "mp_claims_pmf",
    "RuinQuery",
    "CompoundBinomialSpec",
    "psi_recursion",
    "psi_geometric_closed",
    "gerber_recursion",
    "convert_cb_to_gd",
    "convert_gd_to_cb",
    "ConvolutionTable",
    "psi_pk",
    "severity_at_zero",
    "CoefficientSeq",
    "NStarSeq",
    "cbar_sequence",
    "nstar_sequence",
    "psi_nbm",
    "compound_geo_zero_mass",
    "MpApproxConfig",
    "MpCoefficientSeq",
    "mp_coefficients",
    "psi_mp_method1",
    "psi_mp_method2",
    "psi_mp_exact_reference",
    "SimConfig",
    "SimResult",
    "PathStats",
    "GofReport",
    "simulate_paths",
    "simulate_single",
    "check_record_count_law",
    "check_severity_law",
    "__version__",
]
