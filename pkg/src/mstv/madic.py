"""Overlapping m-adic smoothed-cube dictionary.

Atoms are translates and dilations of a fixed smooth bump: a C-infinity
ramped plateau (tensorized across axes) that approximates the indicator of
the centered sub-cube, rescaled to cube side m^{-j} and renormalized to unit
grid L2 norm. One scale holds a translate at every offset of the fine grid
{0, 1, .., m^R - 1}^d / m^R, so the system is heavily overlapping; scales
run j = 0..J-1 where m^{dJ} first reaches the sample budget.

Analysis at one scale is a circular cross-correlation with the sampled
kernel, evaluated by FFT, then subsampled at the offset cells.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import fft as sfft

from .frames import Frame, FrameIndex, ScalePlan
from .grid import TorusSignal

RAMP_LO = 1.0 / 16.0
RAMP_WIDTH = 1.0 / 8.0
RAMP_HI = 15.0 / 16.0


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    with np.errstate(over="ignore"):
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def bump_profile(x: np.ndarray) -> np.ndarray:
    """Smoothed plateau on [0,1): rises over [1/16, 3/16], falls over
    [13/16, 15/16], zero outside; a mollified sub-cube indicator."""
    x = np.asarray(x, dtype=np.float64)
    rise = smooth_step((x - RAMP_LO) / RAMP_WIDTH)
    fall = smooth_step((RAMP_HI - x) / RAMP_WIDTH)
    return rise * fall


@functools.lru_cache(maxsize=64)
def _sampled_kernel(d: int, m: int, scale: int, grid_side: int) -> np.ndarray:
    """Tensor samples of the scale-j kernel on the full grid, normalized to
    unit grid L2 norm; support occupies grid_side / m^scale cells per axis."""
    x = (np.arange(grid_side) / grid_side) * m**scale
    axis_vals = np.where(x < 1.0, bump_profile(np.minimum(x, 1.0)), 0.0)
    kern = axis_vals
    for _ in range(d - 1):
        kern = np.multiply.outer(kern, axis_vals)
    nrm = math.sqrt(float(np.sum(kern**2)) / grid_side**d)
    if nrm == 0.0:
        raise ValueError(
            f"kernel at scale {scale} has empty support on a {grid_side}-grid"
        )
    out = kern / nrm
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _kernel_fft(d: int, m: int, scale: int, grid_side: int):
    kern = _sampled_kernel(d, m, scale, grid_side)
    out = sfft.rfftn(kern)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=64)
def _offset_cells(m: int, resolution: int, grid_side: int) -> np.ndarray:
    """Grid cell of each offset k/m^resolution, snapped to the nearest cell."""
    k = np.arange(m**resolution)
    cells = np.rint(k * grid_side / m**resolution).astype(np.int64) % grid_side
    cells.setflags(write=False)
    return cells


class MadicFrame(Frame):
    """Smoothed m-adic cube system over all fine-grid offsets."""

    kind = "madic"

    def __init__(self, d: int, m: int = 2):
        if d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {d}")
        if m < 2:
            raise ValueError(f"base m must be >= 2, got {m}")
        self.d = d
        self.m = int(m)

    def params(self) -> dict:
        return {"kind": self.kind, "d": self.d, "m": self.m}

    # -- layout ---------------------------------------------------------

    def levels(self, n: int) -> int:
        if n < 2:
            raise ValueError(f"need n >= 2, got {n}")
        J = 1
        while self.m ** (self.d * J) < n:
            J += 1
        return J

    def offset_resolution(self, n: int) -> int:
        J = self.levels(n)
        if self.d <= 2:
            return J
        return (3 * J + 1) // 2  # ceil(J * d/2) for d = 3

    def scale_plan(self, n: int, grid_side: int) -> ScalePlan:
        J = self.levels(n)
        if 2 * self.m ** (J - 1) > grid_side:
            raise ValueError(
                f"grid side {grid_side} cannot resolve the finest cube scale "
                f"{J - 1} (needs at least {2 * self.m ** (J - 1)} cells)"
            )
        R = self.offset_resolution(n)
        r_max = 0
        while self.m ** (r_max + 1) <= grid_side:
            r_max += 1
        r_eff = min(R, r_max)
        snapped = grid_side % self.m**r_eff != 0
        return ScalePlan(
            levels=J,
            cardinality=J * self.m ** (self.d * r_eff),
            offset_resolution=r_eff,
            resolution_capped=r_eff < R,
            position_snapped=snapped,
        )

    def index_set(self, n: int, grid_side: int) -> tuple:
        plan = self.scale_plan(n, grid_side)
        return _madic_index_set(self.d, self.m, plan.levels, plan.offset_resolution)

    # -- transforms ------------------------------------------------------

    def analyze_values(self, arr: np.ndarray, n: int) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.float64)
        grid_side = arr.shape[0]
        plan = self.scale_plan(n, grid_side)
        cells = _offset_cells(self.m, plan.offset_resolution, grid_side)
        pick = np.ix_(*([cells] * self.d))
        spec = sfft.rfftn(arr)
        parts = []
        for j in range(plan.levels):
            corr = sfft.irfftn(spec * np.conj(_kernel_fft(self.d, self.m, j, grid_side)),
                               s=arr.shape)
            parts.append(corr[pick].reshape(-1))
        return np.concatenate(parts) / grid_side**self.d

    def adjoint_values(self, coeff: np.ndarray, n: int, grid_side: int) -> np.ndarray:
        coeff = np.asarray(coeff, dtype=np.float64)
        plan = self.scale_plan(n, grid_side)
        cells = _offset_cells(self.m, plan.offset_resolution, grid_side)
        per_scale = cells.size**self.d
        grids = np.meshgrid(*([cells] * self.d), indexing="ij")
        flat_cells = np.ravel_multi_index([g.reshape(-1) for g in grids],
                                          (grid_side,) * self.d)
        out_spec = None
        for j in range(plan.levels):
            chunk = coeff[j * per_scale : (j + 1) * per_scale]
            placed = np.zeros(grid_side**self.d)
            np.add.at(placed, flat_cells, chunk)
            placed = placed.reshape((grid_side,) * self.d)
            term = sfft.rfftn(placed) * _kernel_fft(self.d, self.m, j, grid_side)
            out_spec = term if out_spec is None else out_spec + term
        return sfft.irfftn(out_spec, s=(grid_side,) * self.d)

    # -- atoms and diagnostics -------------------------------------------

    def atom(self, index: FrameIndex, grid_side: int) -> TorusSignal:
        # position holds offset numerators over m^resolution; the resolution
        # rides in the band slot so the index is self-describing
        j, k, band = index.scale, index.position, index.band
        if len(k) != self.d or len(band) != 1:
            raise ValueError("not a valid index for this dictionary")
        denom = self.m ** band[0]
        if any(not 0 <= c < denom for c in k):
            raise ValueError(f"offset numerators {k} out of range for resolution {band[0]}")
        kern = _sampled_kernel(self.d, self.m, j, grid_side)
        shift = tuple(int(np.rint(c * grid_side / denom)) % grid_side for c in k)
        vals = np.roll(kern, shift, axis=tuple(range(self.d)))
        return TorusSignal(self.d, grid_side, vals)

    def operator_norm(self, n: int, grid_side: int, iters: int = 256) -> float:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(20240211)))
        v = rng.standard_normal((grid_side,) * self.d)
        v /= np.linalg.norm(v)
        lam_prev = 0.0
        for it in range(iters):
            w = self.adjoint_values(self.analyze_values(v, n), n, grid_side)
            lam = float(np.sum(w * v)) / grid_side**self.d / (
                float(np.sum(v * v)) / grid_side**self.d
            )
            nrm = np.linalg.norm(w)
            if nrm == 0.0:
                return 0.0
            v = w / nrm
            if it >= 64 and abs(lam - lam_prev) <= 1e-12 * max(lam, 1.0):
                break
            lam_prev = lam
        return math.sqrt(max(lam, 0.0))


def local_means_sup(s: TorusSignal, frame: "MadicFrame", n: int) -> float:
    """Sup of kernel local means over the budget-n family: the quantity the
    smoothed-cube constraint tube controls, equal to the max absolute
    analysis coefficient."""
    if s.d != frame.d:
        raise ValueError(f"frame is for d={frame.d}, signal has d={s.d}")
    coeffs = frame.analyze_values(s.values, n)
    return float(np.max(np.abs(coeffs))) if coeffs.size else 0.0


@functools.lru_cache(maxsize=32)
def _madic_index_set(d: int, m: int, levels: int, resolution: int) -> tuple:
    indices = []
    for j in range(levels):
        for k in np.ndindex(*((m**resolution,) * d)):
            indices.append(FrameIndex(j, tuple(int(c) for c in k), (resolution,)))
    return tuple(indices)
