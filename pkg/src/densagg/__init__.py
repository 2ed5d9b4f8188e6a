"""Aggregation of step densities on [0, 1] with certified risk bounds.

The package has four layers:

* :mod:`densagg.densities` — exact piecewise-constant densities, losses
  (KL, Hellinger, L1), sampling, class membership, file formats.
* :mod:`densagg.aggregation` — progressive-mixture aggregation and the
  minimum-distance (comparison-set) selector.
* :mod:`densagg.lowerbound` — worst-case bump families, separated word
  sets, closed-form distances, and the hypothesis audit.
* :mod:`densagg.experiments` — seeded Monte Carlo harnesses checking the
  oracle inequality, the selector bound, and the excess-risk rate.

``densagg.cli`` exposes all of it as the ``densagg`` command.
"""

from .densities import (
    MASS_TOL,
    FunctionClass,
    PiecewiseDensity,
    PiecewiseFunction,
    ValidationError,
    common_refinement,
    hellinger_distance,
    kl_divergence,
    l1_distance,
    load_densities,
    load_density,
    load_sample,
    renormalize,
    sample,
    save_densities,
    save_density,
    save_sample,
    validate_class,
)
from .aggregation import (
    CandidateSet,
    WeightTrajectory,
    aggregate,
    empirical_kl,
    mixture,
    progressive_weights,
    yatracos_class,
    yatracos_select,
)
from .lowerbound import (
    HELLINGER_CURVATURE,
    AuditCheck,
    AuditReport,
    PerturbationFamily,
    SeparatedSet,
    analytic_hellinger_sq,
    analytic_kl_product,
    analytic_l1,
    audit_hypotheses,
    build_separated_set,
    bump,
    choose_parameters,
    hamming_distance,
    load_separated_set,
    min_bump_count,
    perturbed_density,
    save_separated_set,
)
from .experiments import (
    CSV_HEADER,
    LOSSES,
    SLOPE_RANGE,
    ExperimentConfig,
    RateStudyResult,
    RiskReport,
    RiskRow,
    build_candidates,
    build_truth,
    load_config,
    run_lowerbound_audit,
    run_oracle_experiment,
    run_rate_study,
    run_yatracos_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # densities
    "MASS_TOL", "FunctionClass", "PiecewiseDensity", "PiecewiseFunction",
    "ValidationError", "common_refinement", "hellinger_distance",
    "kl_divergence", "l1_distance", "load_densities", "load_density",
    "load_sample", "renormalize", "sample", "save_densities", "save_density",
    "save_sample", "validate_class",
    # aggregation
    "CandidateSet", "WeightTrajectory", "aggregate", "empirical_kl",
    "mixture", "progressive_weights", "yatracos_class", "yatracos_select",
    # lower bound
    "HELLINGER_CURVATURE", "AuditCheck", "AuditReport", "PerturbationFamily",
    "SeparatedSet", "analytic_hellinger_sq", "analytic_kl_product",
    "analytic_l1", "audit_hypotheses", "build_separated_set", "bump",
    "choose_parameters", "hamming_distance", "load_separated_set",
    "min_bump_count", "perturbed_density", "save_separated_set",
    # experiments
    "CSV_HEADER", "LOSSES", "SLOPE_RANGE", "ExperimentConfig",
    "RateStudyResult", "RiskReport", "RiskRow", "build_candidates",
    "build_truth", "load_config", "run_lowerbound_audit",
    "run_oracle_experiment", "run_rate_study", "run_yatracos_experiment",
]
