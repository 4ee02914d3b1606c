"""Margin-based active learning of homogeneous halfspaces.

Samplers for isotropic (nearly) log-concave distributions, active and
passive halfspace learners with exact label accounting, Monte-Carlo
verification of the underlying disagreement geometry, and a seeded
experiment harness with CSV emission.
"""

from .analysis import (
    AngleBoundReport,
    CapacityCurve,
    EstimateWithCI,
    MarginDecayReport,
    check_angle_bound,
    check_margin_decay,
    estimate_band_disagreement,
    estimate_band_profile,
    estimate_capacity,
    estimate_dis_coefficient,
    estimate_disagreement,
)
from .distributions import (
    DistributionSpec,
    IsotropyAudit,
    RandomStream,
    WhiteningTransform,
    apply_affine,
    estimate_whitening,
    isotropy_audit,
    make_beta_mixture,
    make_gaussian,
    make_uniform_ball,
    midpoint_log_concavity_defect,
    sample,
    sample_chunks,
)
from .errors import (
    BudgetExhaustedError,
    CalibrationError,
    DegenerateDataError,
    DegeneratePointError,
    DegenerateRotationError,
    DimensionMismatchError,
    InfeasibleError,
    InsufficientResolutionError,
    RankDeficientError,
)
from .geometry import (
    AngularBall,
    Hypothesis,
    LabeledExample,
    angle,
    dis_membership,
    dis_membership_many,
    predict,
    rotate_towards,
    unit_vector,
)
from .harness import (
    CheckResult,
    ExperimentConfig,
    ExperimentRecord,
    VerificationReport,
    build_distribution,
    load_config,
    parse_config,
    parse_dist_descriptor,
    read_records,
    run_experiment,
    run_verification_suite,
    write_records,
)
from .learners import (
    LearnResult,
    RoundRecord,
    Schedule,
    constrained_erm,
    find_consistent,
    margin_active_learn,
    margin_active_learn_noise,
    passive_learn,
)
from .oracles import LabelOracle, NoiseModel, excess_error, noisy_labels

__version__ = "0.1.0"

__all__ = [
    "AngleBoundReport",
    "AngularBall",
    "BudgetExhaustedError",
    "CalibrationError",
    "CapacityCurve",
    "CheckResult",
    "DegenerateDataError",
    "DegeneratePointError",
    "DegenerateRotationError",
    "DimensionMismatchError",
    "DistributionSpec",
    "EstimateWithCI",
    "ExperimentConfig",
    "ExperimentRecord",
    "Hypothesis",
    "InfeasibleError",
    "InsufficientResolutionError",
    "IsotropyAudit",
    "LabelOracle",
    "LabeledExample",
    "LearnResult",
    "MarginDecayReport",
    "NoiseModel",
    "RandomStream",
    "RankDeficientError",
    "RoundRecord",
    "Schedule",
    "VerificationReport",
    "WhiteningTransform",
    "angle",
    "apply_affine",
    "build_distribution",
    "check_angle_bound",
    "check_margin_decay",
    "constrained_erm",
    "dis_membership",
    "dis_membership_many",
    "estimate_band_disagreement",
    "estimate_band_profile",
    "estimate_capacity",
    "estimate_dis_coefficient",
    "estimate_disagreement",
    "estimate_whitening",
    "excess_error",
    "find_consistent",
    "isotropy_audit",
    "load_config",
    "make_beta_mixture",
    "make_gaussian",
    "make_uniform_ball",
    "margin_active_learn",
    "margin_active_learn_noise",
    "midpoint_log_concavity_defect",
    "noisy_labels",
    "parse_config",
    "parse_dist_descriptor",
    "passive_learn",
    "predict",
    "read_records",
    "rotate_towards",
    "run_experiment",
    "run_verification_suite",
    "sample",
    "sample_chunks",
    "unit_vector",
    "write_records",
]
