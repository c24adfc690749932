"""Frame-constrained total-variation denoising on periodic grids.

Signals live on N^d periodic grids (d in {1, 2, 3}). The estimator minimizes
the anisotropic TV seminorm subject to a sup bound on multiscale analysis
coefficients of the residual, with periodized Daubechies wavelets or m-adic
smoothed-cube dictionaries supplying the coefficients. A Monte Carlo harness
measures L^q risks over grid ladders and fits log-log rate slopes.
"""

from .analysis import (
    ESTIMATORS,
    ExperimentSpec,
    PointRisk,
    RateFit,
    RiskReport,
    assouad_family,
    assouad_max_amplitude,
    assouad_separation,
    check_interpolation,
    estimate_risk,
    fit_rate,
    interpolation_corpus,
    target_exponent,
)
from .frames import (
    FRAME_KINDS,
    CoefficientVector,
    Frame,
    FrameIndex,
    ScalePlan,
    frame_from_params,
    make_frame,
    read_coefficients,
    write_coefficients,
)
from .grid import (
    BV_FLAVORS,
    SUPPORTED_DIMS,
    TorusSignal,
    bv_seminorm,
    divergence,
    gradient,
    inner,
    lq_norm,
    make_signal,
    sup_norm,
)
from .madic import MadicFrame, local_means_sup
from .noise import (
    DEFAULT_KAPPA,
    NoiseSpec,
    Observations,
    estimate_pixel_sd,
    gamma_universal,
    noise_stream,
    observations_from_pixels,
    observe,
    pixel_noise_sd,
    simulate_pixels,
    truth_feasible,
)
from .sigio import read_signal, write_signal
from .solver import (
    STATUS_CONVERGED,
    STATUS_EMPTY,
    STATUS_MAX_ITERS,
    SolverConfig,
    SolverResult,
    SweepResult,
    bregman_tv_divergence,
    certify_infeasible,
    oracle_lambda_sweep,
    solve_frame_constrained_tv,
    solve_rof,
)
from .truths import TRUTH_NAMES, TruthInfo, truth_library
from .wavelets import WaveletFrame

__version__ = "0.1.0"

__all__ = [
    "BV_FLAVORS",
    "DEFAULT_KAPPA",
    "ESTIMATORS",
    "FRAME_KINDS",
    "STATUS_CONVERGED",
    "STATUS_EMPTY",
    "STATUS_MAX_ITERS",
    "SUPPORTED_DIMS",
    "TRUTH_NAMES",
    "CoefficientVector",
    "ExperimentSpec",
    "Frame",
    "FrameIndex",
    "MadicFrame",
    "NoiseSpec",
    "Observations",
    "PointRisk",
    "RateFit",
    "RiskReport",
    "ScalePlan",
    "SolverConfig",
    "SolverResult",
    "SweepResult",
    "TorusSignal",
    "TruthInfo",
    "WaveletFrame",
    "assouad_family",
    "assouad_max_amplitude",
    "assouad_separation",
    "bregman_tv_divergence",
    "bv_seminorm",
    "certify_infeasible",
    "check_interpolation",
    "divergence",
    "estimate_pixel_sd",
    "estimate_risk",
    "fit_rate",
    "frame_from_params",
    "gamma_universal",
    "gradient",
    "inner",
    "interpolation_corpus",
    "local_means_sup",
    "lq_norm",
    "make_frame",
    "make_signal",
    "noise_stream",
    "observations_from_pixels",
    "observe",
    "oracle_lambda_sweep",
    "pixel_noise_sd",
    "read_coefficients",
    "read_signal",
    "simulate_pixels",
    "solve_frame_constrained_tv",
    "solve_rof",
    "sup_norm",
    "target_exponent",
    "truth_feasible",
    "truth_library",
    "write_coefficients",
    "write_signal",
]
