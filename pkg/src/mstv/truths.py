"""Built-in test signals with numerically certified norms.

Every generator returns the signal together with its measured sup norm and
total variation, so membership in a bounded-variation ball is a recorded
fact about the emitted array rather than a promise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import TorusSignal, bv_seminorm, sup_norm


@dataclass(frozen=True)
class TruthInfo:
    name: str
    d: int
    grid_side: int
    params: dict
    sup_norm: float
    bv_anisotropic: float
    bv_isotropic: float

    def within_ball(self, radius: float) -> bool:
        return self.sup_norm <= radius and self.bv_anisotropic <= radius


def _cell_centers(grid_side: int) -> np.ndarray:
    return np.arange(grid_side) / grid_side


def _constant(d, grid_side, value=0.5):
    return np.full((grid_side,) * d, float(value))


def _step(d, grid_side, height=1.0, start=0.25, end=0.75):
    if d != 1:
        raise ValueError("step is one-dimensional")
    x = _cell_centers(grid_side)
    return np.where((x >= start) & (x < end), float(height), 0.0)


def _ramp(d, grid_side, slope=1.0):
    if d != 1:
        raise ValueError("ramp is one-dimensional")
    return float(slope) * _cell_centers(grid_side)


def _step_ramp(d, grid_side, step_height=0.6, ramp_height=0.7):
    # plateau over [0.15, 0.45), linear rise over [0.55, 0.9): one jump pair
    # and one gradient stretch, the standard mixed-feature target
    if d != 1:
        raise ValueError("step_ramp is one-dimensional")
    x = _cell_centers(grid_side)
    out = np.where((x >= 0.15) & (x < 0.45), float(step_height), 0.0)
    on = (x >= 0.55) & (x < 0.9)
    out[on] += float(ramp_height) * (x[on] - 0.55) / 0.35
    return out


_BLOCK_EDGES = (0.1, 0.13, 0.15, 0.23, 0.25, 0.4, 0.44, 0.65, 0.76, 0.78, 0.81)
_BLOCK_SIGNS = (4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2)


def _blocks(d, grid_side, scale=0.2):
    if d != 1:
        raise ValueError("blocks is one-dimensional")
    x = _cell_centers(grid_side)
    out = np.zeros(grid_side)
    for edge, sgn in zip(_BLOCK_EDGES, _BLOCK_SIGNS):
        out += sgn * (x >= edge)
    out -= out.mean()
    return float(scale) * out


def _disc(d, grid_side, cx=0.5, cy=0.5, radius=0.25, height=1.0):
    if d != 2:
        raise ValueError("disc is two-dimensional")
    x = _cell_centers(grid_side)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return float(height) * (((xx - cx) ** 2 + (yy - cy) ** 2) <= radius**2).astype(float)


def _square(d, grid_side, lo=0.25, hi=0.75, height=1.0):
    if d != 2:
        raise ValueError("square is two-dimensional")
    x = _cell_centers(grid_side)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    inside = (xx >= lo) & (xx < hi) & (yy >= lo) & (yy < hi)
    return float(height) * inside.astype(float)


def _cartoon(d, grid_side, scale=1.0):
    # piecewise-constant overlay of discs and a square, a cartoon scene
    if d != 2:
        raise ValueError("cartoon is two-dimensional")
    out = 0.8 * _disc(2, grid_side, cx=0.38, cy=0.42, radius=0.2)
    out -= 0.5 * _square(2, grid_side, lo=0.55, hi=0.85)
    out += 0.3 * _disc(2, grid_side, cx=0.72, cy=0.3, radius=0.12)
    return float(scale) * out


def _box(d, grid_side, lo=0.25, hi=0.75, height=1.0):
    if d != 3:
        raise ValueError("box is three-dimensional")
    x = _cell_centers(grid_side)
    xx, yy, zz = np.meshgrid(x, x, x, indexing="ij")
    inside = (xx >= lo) & (xx < hi) & (yy >= lo) & (yy < hi) & (zz >= lo) & (zz < hi)
    return float(height) * inside.astype(float)


def _sinusoid(d, grid_side, freq=2, amplitude=1.0):
    x = _cell_centers(grid_side)
    axes = np.meshgrid(*([x] * d), indexing="ij")
    out = np.full((grid_side,) * d, float(amplitude))
    for ax in axes:
        out = out * np.sin(2 * np.pi * freq * ax)
    return out


_GENERATORS = {
    "constant": _constant,
    "step": _step,
    "ramp": _ramp,
    "step_ramp": _step_ramp,
    "blocks": _blocks,
    "disc": _disc,
    "square": _square,
    "cartoon": _cartoon,
    "box": _box,
    "sinusoid": _sinusoid,
}

TRUTH_NAMES = tuple(sorted(_GENERATORS))


def truth_library(name: str, d: int, grid_side: int, **params):
    """Build a named signal; returns (TorusSignal, TruthInfo)."""
    if name not in _GENERATORS:
        raise ValueError(f"unknown truth {name!r}, expected one of {TRUTH_NAMES}")
    values = _GENERATORS[name](d, grid_side, **params)
    signal = TorusSignal(d, grid_side, values)
    info = TruthInfo(
        name=name,
        d=d,
        grid_side=grid_side,
        params={k: float(v) for k, v in params.items()},
        sup_norm=sup_norm(signal),
        bv_anisotropic=bv_seminorm(signal, "anisotropic"),
        bv_isotropic=bv_seminorm(signal, "isotropic"),
    )
    return signal, info
