"""Diffusions whose law at an independent exponential time is prescribed.

Given a target distribution mu, a starting point x0 in its support and a
clock rate lam, `synthesize` builds the natural-scale diffusion (speed
measure, generalized diffusion) whose value at an independent Exp(lam)
time is distributed as mu.  Two independent simulation engines and a
statistical verification layer check the construction against itself.
"""

from .engines import (
    CTMCGrid,
    HittingEstimate,
    SimConfig,
    TerminalSample,
    build_grid,
    simulate_hitting,
    simulate_terminal,
)
from .errors import (
    ArbitrageViolation,
    EmptyInput,
    EngineMismatch,
    FormatError,
    GridDegenerate,
    InsufficientPoints,
    IntegrationOverflow,
    InvalidParameters,
    NonMonotoneMap,
    NonfinitePotential,
    SpeedlawError,
    StartOutsideSupport,
    WronskianOutOfRange,
)
from .estimator import DiffusionSynthesizer
from .measures import (
    DensityPiece,
    PotentialTriple,
    TargetMeasure,
    build_builtin,
    from_call_prices,
    from_call_prices_csv,
    from_samples,
    from_samples_csv,
)
from .modelio import read_model, write_model, write_report, write_samples
from .synthesis import (
    Boundary,
    DiffusionModel,
    EigenPair,
    MartingaleClass,
    RepresentingMeasure,
    apply_scale,
    classify_boundary,
    eigenfunctions,
    extend_eigenfunction,
    hitting_laplace,
    martingale_class,
    representing_measure,
    synthesize,
    wronskian_sup,
)
from .verification import (
    ConsistencyReport,
    Thresholds,
    consistency_report,
    corollary_check,
    eigen_residual,
    ks_critical,
    ks_distance,
    ks_two_sample,
    ks_two_sample_critical,
    wasserstein1,
)

__version__ = "0.1.0"

__all__ = [
    "ArbitrageViolation",
    "Boundary",
    "CTMCGrid",
    "ConsistencyReport",
    "DensityPiece",
    "DiffusionModel",
    "DiffusionSynthesizer",
    "EigenPair",
    "EmptyInput",
    "EngineMismatch",
    "FormatError",
    "GridDegenerate",
    "HittingEstimate",
    "InsufficientPoints",
    "IntegrationOverflow",
    "InvalidParameters",
    "MartingaleClass",
    "NonMonotoneMap",
    "NonfinitePotential",
    "PotentialTriple",
    "RepresentingMeasure",
    "SimConfig",
    "SpeedlawError",
    "StartOutsideSupport",
    "TargetMeasure",
    "TerminalSample",
    "Thresholds",
    "WronskianOutOfRange",
    "apply_scale",
    "build_builtin",
    "build_grid",
    "classify_boundary",
    "consistency_report",
    "corollary_check",
    "eigen_residual",
    "eigenfunctions",
    "extend_eigenfunction",
    "from_call_prices",
    "from_call_prices_csv",
    "from_samples",
    "from_samples_csv",
    "hitting_laplace",
    "ks_critical",
    "ks_distance",
    "ks_two_sample",
    "ks_two_sample_critical",
    "martingale_class",
    "read_model",
    "representing_measure",
    "simulate_hitting",
    "simulate_terminal",
    "synthesize",
    "wasserstein1",
    "wronskian_sup",
    "write_model",
    "write_report",
    "write_samples",
]
