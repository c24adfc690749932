"""White-noise observation model on the grid.

A signal f observed at sample budget n carries pixelwise Gaussian noise of
standard deviation sigma * sqrt(N^d / n); analyzing the noisy pixels against
any frame then reproduces the exact joint law of the continuous-model
coefficient observations (mean <atom, f>, covariance sigma^2/n times the
atom Gram matrix), so frames never need their own noise code path.

Randomness is counter-based: every (seed, stream path) pair opens an
independent Philox stream, so replicates are reproducible bit-for-bit
regardless of scheduling or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import CoefficientVector, Frame, ScalePlan
from .grid import TorusSignal

DEFAULT_KAPPA = math.sqrt(2.0)

_RNG_KINDS = ("philox",)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level, sample budget and threshold multiplier for one model."""

    sigma: float
    n: int
    kappa: float = DEFAULT_KAPPA
    rng: str = "philox"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.n < 1:
            raise ValueError(f"sample budget must be >= 1, got {self.n}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.rng not in _RNG_KINDS:
            raise ValueError(f"rng must be one of {_RNG_KINDS}, got {self.rng!r}")


def noise_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent Philox stream addressed by (seed, path...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))))


def pixel_noise_sd(noise: NoiseSpec, d: int, grid_side: int) -> float:
    cells = grid_side**d
    if noise.n > cells:
        raise ValueError(
            f"sample budget n={noise.n} exceeds the grid's {cells} cells"
        )
    return noise.sigma * math.sqrt(cells / noise.n)


def simulate_pixels(
    truth: TorusSignal, noise: NoiseSpec, seed: int, replicate: int = 0
) -> TorusSignal:
    """Truth plus iid pixel noise at the model's per-cell level."""
    sd = pixel_noise_sd(noise, truth.d, truth.grid_side)
    eps = noise_stream(seed, replicate).standard_normal(truth.values.shape)
    return TorusSignal(truth.d, truth.grid_side, truth.values + sd * eps)


def gamma_universal(kappa: float, sigma: float, n: int, cardinality: int) -> float:
    """Threshold kappa * sigma * sqrt(2 log(#family) / n)."""
    if cardinality < 1:
        raise ValueError("family cardinality must be >= 1")
    if not (kappa > 0 and sigma > 0 and n >= 1):
        raise ValueError("kappa, sigma must be positive and n >= 1")
    return kappa * sigma * math.sqrt(2.0 * math.log(cardinality) / n)


@dataclass(frozen=True)
class Observations:
    """One noisy realization analyzed against a frame."""

    pixels: TorusSignal
    coefficients: CoefficientVector
    gamma: float
    noise: NoiseSpec
    plan: ScalePlan
    frame_params: dict = field(default_factory=dict)


def observe(
    truth: TorusSignal, frame: Frame, noise: NoiseSpec, seed: int, replicate: int = 0
) -> Observations:
    """Simulate pixels, analyze them, and attach the universal threshold."""
    pixels = simulate_pixels(truth, noise, seed, replicate)
    plan = frame.scale_plan(noise.n, truth.grid_side)
    coeffs = frame.analyze(pixels, noise.n)
    gamma = gamma_universal(noise.kappa, noise.sigma, noise.n, plan.cardinality)
    return Observations(pixels, coeffs, gamma, noise, plan, frame.params())


def observations_from_pixels(
    pixels: TorusSignal, frame: Frame, noise: NoiseSpec
) -> Observations:
    """Analyze already-observed pixels and attach the universal threshold;
    the entry point for denoising data not simulated here."""
    plan = frame.scale_plan(noise.n, pixels.grid_side)
    coeffs = frame.analyze(pixels, noise.n)
    gamma = gamma_universal(noise.kappa, noise.sigma, noise.n, plan.cardinality)
    return Observations(pixels, coeffs, gamma, noise, plan, frame.params())


def truth_feasible(truth: TorusSignal, frame: Frame, obs: Observations) -> bool:
    """Whether the true signal sits inside the coefficient tube (the
    feasibility event whose probability the threshold controls)."""
    clean = frame.analyze_values(truth.values, obs.noise.n)
    return bool(np.max(np.abs(clean - obs.coefficients.values)) <= obs.gamma)


_MAD_TO_SD = 0.6744897501960817  # Phi^{-1}(3/4)


def estimate_pixel_sd(noisy: TorusSignal, vanishing_moments: int = 2) -> float:
    """Robust pixel noise level from the finest detail coefficients.

    One orthonormal filter-bank step leaves pure noise coefficients with the
    pixel standard deviation; the median absolute value is insensitive to a
    sparse signal contribution.
    """
    from .wavelets import _analyze_level, detail_filter, scaling_filter

    h = scaling_filter(vanishing_moments)
    blocks = _analyze_level(noisy.values, h, detail_filter(h))
    details = np.concatenate(
        [b.ravel() for band, b in blocks.items() if any(band)]
    )
    return float(np.median(np.abs(details)) / _MAD_TO_SD)
