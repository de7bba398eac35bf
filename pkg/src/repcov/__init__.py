"""Sparse positive-definite covariance and correlation estimation for
repeated measurements: sample estimators at the between- and
within-subject levels, a constrained sparse solver, cross-validation
tuning, closed-form tuning rates, and a simulation harness."""

from .data import DesignSummary, RepeatedData, SubjectBlock, SymMatrix
from .errors import (
    ConfigError,
    DegenerateDesign,
    DimensionMismatch,
    EigenFailure,
    EmptyInput,
    InfeasibleSplit,
    MaxItersExceeded,
    NonpositiveDiagonal,
    NotPositiveDefinite,
    ParseError,
    RaggedRow,
    RepcovError,
)
from .estimators import (
    EstimatorKind,
    Mode,
    Target,
    aggregated_sample,
    anova_sample,
    between_sample,
    design_summary,
    sample_estimate,
    to_correlation,
    within_sample,
)
from .solver import (
    AdmmResult,
    AdmmSettings,
    default_delta,
    kkt_residual,
    objective_value,
    psd_floor_projection,
    soft_threshold_offdiag,
    solve,
)
from .tuning import (
    CvConfig,
    CvResult,
    TheoryConstants,
    kfold_cv,
    lambda_grid,
    theory_lambda_aggregated,
    theory_lambda_aggregated_vs_within,
    theory_lambda_anova,
    theory_lambda_between,
    theory_lambda_within,
)
from .metrics import (
    SupportScore,
    RocResult,
    frobenius_error,
    is_pd,
    roc_curve,
    spectral_error,
    support_score,
)
from .simulate import (
    CovTemplate,
    StudyConfig,
    StudyReport,
    build_template,
    generate,
    model_templates,
    run_study,
)

__version__ = "0.1.0"
