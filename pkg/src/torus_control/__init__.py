"""Spectral controllability and stabilization of linear dispersive equations on the 2-torus.

The state is truncated to the Fourier box ``|k1|, |k2| <= N``.  Controls
act through two strips via a smooth-bump operator ``G``; exact controls are
built with a biorthogonal family and stabilizing feedback with a damped
Gramian.
"""

__version__ = "0.1.0"

from .analysis import (
    GapReport,
    HypothesisReport,
    MultiplicityReport,
    gap_statistics,
    multiplicity_classes,
    verify_H2,
    verify_H3,
    verify_hypothesis,
)
from .control_operator import (
    BumpFunction,
    ControlOperator,
    apply_G,
    apply_G1,
    apply_G2,
    build_control_operator,
    determinant_margins,
    g_matrix_entry,
    m_coefficient,
    make_bump,
)
from .errors import (
    ConditioningError,
    ConfigError,
    HypothesisError,
    MeanMismatchError,
    RadiusMismatchError,
    RealValuednessError,
    TorusControlError,
    UndersampledGridError,
)
from .spectral import (
    GridSamples,
    ModeIndex,
    SpectralField,
    from_grid,
    l2_inner,
    psi,
    sobolev_inner,
    sobolev_norm,
    to_grid,
)
from .stabilization import (
    DecayReport,
    FeedbackSystem,
    build_feedback,
    closed_loop_simulate,
    damped_gramian,
    decay_fit,
    decay_fit_series,
    feedback_gains,
    observability_constant,
)
from .symbols import (
    DispersionSymbol,
    EigenvalueTable,
    builtin_symbol,
    eigenvalue,
    propagate_free,
    symbol_growth_check,
)
from .synthesis import (
    ControlSignal,
    DualBasis,
    Trajectory,
    assemble_control,
    build_dual_basis,
    control_coefficients,
    control_norm_ratio,
    dual_basis,
    duhamel_solve,
    gram_matrix,
    reduce_target,
    spillover,
    steer,
    verify_moment_equations,
)

__all__ = [
    "__version__",
    "GapReport",
    "HypothesisReport",
    "MultiplicityReport",
    "gap_statistics",
    "multiplicity_classes",
    "verify_H2",
    "verify_H3",
    "verify_hypothesis",
    "BumpFunction",
    "ControlOperator",
    "apply_G",
    "apply_G1",
    "apply_G2",
    "build_control_operator",
    "determinant_margins",
    "g_matrix_entry",
    "m_coefficient",
    "make_bump",
    "ConditioningError",
    "ConfigError",
    "HypothesisError",
    "MeanMismatchError",
    "RadiusMismatchError",
    "RealValuednessError",
    "TorusControlError",
    "UndersampledGridError",
    "GridSamples",
    "ModeIndex",
    "SpectralField",
    "from_grid",
    "l2_inner",
    "psi",
    "sobolev_inner",
    "sobolev_norm",
    "to_grid",
    "DecayReport",
    "FeedbackSystem",
    "build_feedback",
    "closed_loop_simulate",
    "damped_gramian",
    "decay_fit",
    "decay_fit_series",
    "feedback_gains",
    "observability_constant",
    "DispersionSymbol",
    "EigenvalueTable",
    "builtin_symbol",
    "eigenvalue",
    "propagate_free",
    "symbol_growth_check",
    "ControlSignal",
    "DualBasis",
    "Trajectory",
    "assemble_control",
    "build_dual_basis",
    "control_coefficients",
    "control_norm_ratio",
    "dual_basis",
    "duhamel_solve",
    "gram_matrix",
    "reduce_target",
    "spillover",
    "steer",
    "verify_moment_equations",
]
