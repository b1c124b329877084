"""povmlab: indirect estimation of quantum ensemble averages from POVM statistics."""

from .abspace import (
    ABSpace,
    VandermondeRecovery,
    ab_space,
    is_ab_infocomplete,
    is_minimal_ab_infocomplete,
    project_povm,
    vandermonde_recovery,
)
from .hs import DEFAULT_TOL, Tolerances
from .montecarlo import SampleRun, empirical_estimate, merge_runs, sample, sample_range
from .postproc import (
    BlurResult,
    MarkovMatrix,
    apply_post_processing,
    blur_for_post_processing,
    find_joint_measurement,
    find_post_processing,
    is_clean,
    is_post_processing_of,
    minimal_blur,
    smear_out,
    unbias,
)
from .povm import (
    DualFrame,
    NotCompleteError,
    NotPositiveError,
    Observable,
    Povm,
    alternate_dual,
    canonical_dual,
    frame_operator,
    is_infocomplete,
    is_r_infocomplete,
    rank_one_refinement,
    spectral_povm,
    symmetrize_dual,
    validate_povm,
)
from .processing import (
    DegenerateMetricWarning,
    Ensemble,
    OutsideSpanError,
    ProcessingFunction,
    ensemble_error,
    estimate,
    metric_diagonal,
    min_error,
    optimal_dual,
    processing_from_dual,
    statistical_error,
)
from .qubit import (
    BlochPovm,
    NoiseSummary,
    error_bound,
    noise_quantities,
    optimal_four_outcome,
    optimal_three_outcome,
    sigma_pm,
)
from .standard import (
    ensemble_preset,
    maximally_mixed_ensemble,
    projective_povm,
    sic_povm,
    six_state_ensemble,
    trine_povm,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "Tolerances",
    "Povm",
    "DualFrame",
    "Observable",
    "Ensemble",
    "ProcessingFunction",
    "MarkovMatrix",
    "BlurResult",
    "BlochPovm",
    "NoiseSummary",
    "ABSpace",
    "VandermondeRecovery",
    "SampleRun",
    "NotPositiveError",
    "NotCompleteError",
    "OutsideSpanError",
    "DegenerateMetricWarning",
    "validate_povm",
    "frame_operator",
    "canonical_dual",
    "alternate_dual",
    "symmetrize_dual",
    "is_infocomplete",
    "is_r_infocomplete",
    "rank_one_refinement",
    "spectral_povm",
    "processing_from_dual",
    "estimate",
    "statistical_error",
    "ensemble_error",
    "metric_diagonal",
    "optimal_dual",
    "min_error",
    "apply_post_processing",
    "find_post_processing",
    "is_post_processing_of",
    "is_clean",
    "smear_out",
    "minimal_blur",
    "blur_for_post_processing",
    "unbias",
    "find_joint_measurement",
    "ab_space",
    "is_ab_infocomplete",
    "is_minimal_ab_infocomplete",
    "project_povm",
    "vandermonde_recovery",
    "sample",
    "sample_range",
    "merge_runs",
    "empirical_estimate",
    "error_bound",
    "noise_quantities",
    "optimal_three_outcome",
    "optimal_four_outcome",
    "sigma_pm",
    "sic_povm",
    "projective_povm",
    "trine_povm",
    "six_state_ensemble",
    "maximally_mixed_ensemble",
    "ensemble_preset",
    "__version__",
]
