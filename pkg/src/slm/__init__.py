"""Strict local martingales: exact samplers, analytic classifiers, and
Monte Carlo estimators for the martingale defect, tail functional and
small-moment diagnostics."""

from .core import (
    Besq,
    BesselPower,
    Brownian,
    EstimationFailedError,
    GenericDiffusion,
    INCONCLUSIVE,
    InvalidArgumentError,
    InverseBes3,
    ItoIntegral,
    MARTINGALE,
    ModelInvalidError,
    OVERFLOW_SENTINEL,
    PrescribedMean,
    ProcessModel,
    RandomSource,
    STRICT_LOCAL,
    SamplePath,
    SlmError,
    TailQuantities,
    TimeGrid,
    Verdict,
    derive_stream,
    uniform_grid,
)
from .expr import (
    EvalDomainError,
    Expr,
    ExprError,
    eval_expr,
    eval_log,
    parse_expr,
    to_source,
)
from .samplers import (
    BesqState,
    euler_maruyama_path,
    inverse_bes3_mean,
    ito_integral_path,
    prescribed_mean_time_change,
    sample_besq_exact,
    sample_bessel_power_path,
    sample_brownian_path,
    sample_inverse_bes3_gaussian,
    sample_inverse_bes3_path,
    sample_path,
    sample_prescribed_mean_path,
)
from .classifier import (
    DichotomyResult,
    IntegralVerdict,
    dichotomy_f_moment,
    improper_integral_verdict,
    integrand_small_moment_classify,
    kotani_classify,
    l2_test,
)
from .estimators import (
    DefectCurve,
    MomentScan,
    TailScan,
    mean_curve,
    path_sup,
    small_moment_scan,
    tail_scan,
    tail_quantities,
)

__version__ = "0.1.0"
