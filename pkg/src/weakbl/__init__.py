"""Weak convergence and the Brezis-Lieb defect: inequalities, oscillating profiles, counterexamples."""

from .counterex import (
    CounterexampleReport,
    DensityDesign,
    MomentSpec,
    design_density,
    ode_counterexample,
    project_moments,
    pushforward_moment,
    search_step_profile,
    solve_profile_ode,
    verify_counterexample,
)
from .defect import (
    DefectSeries,
    bl_defect,
    defect_limit_theory,
    defect_series,
    hilbert_identity_residuals,
    p4_identity_check,
    psi_hypothesis_check,
)
from .funcspace import (
    SampledProfile,
    ScalarMap,
    StepFunction,
    ValidationError,
    integrate_composition,
    lp_norm,
    pair,
    scalar_map,
)
from .inequality import (
    InequalityCertificate,
    Residual,
    certify_nonneg,
    check_psi_domination,
    check_vector_structure,
    eval_residual,
    find_violation,
    scan_p,
)
from .oscillate import (
    composition_weak_limit,
    convergence_table,
    pair_oscillated,
    rescale,
    weak_limit_mean,
)

__version__ = "0.1.0"

__all__ = [
    "CounterexampleReport",
    "DefectSeries",
    "DensityDesign",
    "InequalityCertificate",
    "MomentSpec",
    "Residual",
    "SampledProfile",
    "ScalarMap",
    "StepFunction",
    "ValidationError",
    "bl_defect",
    "certify_nonneg",
    "check_psi_domination",
    "check_vector_structure",
    "composition_weak_limit",
    "convergence_table",
    "defect_limit_theory",
    "defect_series",
    "design_density",
    "eval_residual",
    "find_violation",
    "hilbert_identity_residuals",
    "integrate_composition",
    "lp_norm",
    "ode_counterexample",
    "p4_identity_check",
    "pair",
    "pair_oscillated",
    "project_moments",
    "psi_hypothesis_check",
    "pushforward_moment",
    "rescale",
    "scalar_map",
    "scan_p",
    "search_step_profile",
    "solve_profile_ode",
    "verify_counterexample",
    "weak_limit_mean",
]
