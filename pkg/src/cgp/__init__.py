"""Gaussian-process interpolation under inequality constraints.

Functions are represented in a finite hat-function basis whose
coefficients carry a Gaussian prior; bounds, monotonicity, convexity and
isotonicity then reduce to finitely many linear inequalities on the
coefficients, so every sampled path satisfies the constraint on the
whole domain.
"""
from .basis import BasisKind, KnotGrid
from .exceptions import (
    CGPError,
    DataConflictError,
    InfeasibleError,
    IterationLimitError,
    KernelTooRoughError,
    LowAcceptanceError,
    ModelBuildError,
    RankDeficientError,
)
from .kernels import Family, KernelSpec, capability, kernel_deriv, kernel_eval, smoothness
from .model import (
    Bounds,
    Convex,
    DesignData,
    FiniteDimModel,
    Isotonic,
    MonotoneC0,
    MonotoneC1,
    build_bounded,
    build_convex,
    build_isotonic,
    build_model,
    build_monotone_c0,
    build_monotone_c1,
)
from .posterior import (
    PosteriorSummary,
    PredictionGrid,
    draw_samples,
    gp_predict,
    inequality_mean_curve,
    inequality_mode,
    inequality_mode_curve,
    kriging_mean,
    prediction_intervals,
    sample_paths,
    summarize,
)
from .qp import QpSolution, QuadraticProgram, solve_mode
from .tmvn import Method, SampleBatch, SamplerConfig, sample_gibbs, sample_rejection_from_mode, truncnorm_1d

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
