"""Generalization-bound toolkit for multi-source and source+target domain adaptation.

Discrete and linear-Gaussian domains, finite function classes, divergences
between domains, complexity estimates, closed-form bounds, Monte-Carlo
verification of the underlying concentration inequalities, and the
least-squares adaptation experiments.
"""
from .bounds import (
    BoundReport,
    Theorem,
    bound_combined_rademacher,
    bound_combined_uen,
    bound_multi_rademacher,
    bound_multi_uen,
    classical_baseline,
    classical_rademacher,
    classical_uen,
    optimal_tau,
    optimal_weights,
)
from .complexity import (
    NormSpec,
    RademacherEstimate,
    covering_number_greedy,
    norm_distance,
    rademacher_empirical,
    rademacher_expected,
    uniform_entropy_estimate,
)
from .concentration import (
    BoundedFunction,
    SymmetrizationResult,
    TailCurve,
    verify_deviation_combined,
    verify_deviation_multi,
    verify_mcdiarmid_classical,
    verify_mcdiarmid_generalized,
    verify_symmetrization_combined,
    verify_symmetrization_multi,
)
from .divergences import DivergenceReport, discrepancy_distance, divergence_report, ipm, q_quantity, weighted_ipm
from .domains import (
    BetaMode,
    Dataset,
    DiscreteDomain,
    LinearGaussianDomainSpec,
    exact_expectation,
    read_dataset_csv,
    sample_discrete,
    sample_linear_gaussian,
    write_dataset_csv,
)
from .exceptions import (
    ConfigurationError,
    DABoundsError,
    DegenerateDesignError,
    InvalidCertificateError,
    InvalidInputError,
    PreconditionError,
    UnsupportedInputError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    emit_csv,
    default_combined_config,
    default_multi_source_config,
    run_combined,
    run_multi_source,
)
from .hypotheses import (
    CombinedDomainRegressor,
    EvaluationMatrix,
    FiniteFunctionClass,
    LinearModel,
    LossFunction,
    MixCoefficient,
    SimplexWeights,
    WeightedSourceRegressor,
    combined_empirical_risk,
    empirical_risk,
    fit_combined_least_squares,
    fit_weighted_least_squares,
    weighted_empirical_risk,
)

__version__ = "0.1.0"
