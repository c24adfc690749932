"""Signals on the periodic unit cube sampled on a regular power-of-two grid.

The cube [0,1)^d is identified with the N^d grid x_i = i/N, i in {0..N-1}^d,
and all integrals are Riemann sums with cell weight N^{-d}. Differences wrap
around periodically in every axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_DIMS = (1, 2, 3)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusSignal:
    """Real samples on the periodic N^d grid, row-major, locked read-only.

    Attributes
    ----------
    d : int
        Spatial dimension, one of (1, 2, 3).
    grid_side : int
        Samples per axis N, a power of two.
    values : np.ndarray
        float64 array of shape (N,)*d; entry at index i holds the sample
        at the cell anchor x_i = i/N.
    """

    d: int
    grid_side: int
    values: np.ndarray

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMS:
            raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {self.d}")
        if not is_power_of_two(self.grid_side):
            raise ValueError(f"grid side must be a power of two, got {self.grid_side}")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (self.grid_side,) * self.d:
            raise ValueError(
                f"values shape {arr.shape} does not match grid ({self.grid_side},)*{self.d}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal values must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_cells(self) -> int:
        return self.grid_side**self.d

    def __add__(self, other: "TorusSignal") -> "TorusSignal":
        self._check_compatible(other)
        return TorusSignal(self.d, self.grid_side, self.values + other.values)

    def __sub__(self, other: "TorusSignal") -> "TorusSignal":
        self._check_compatible(other)
        return TorusSignal(self.d, self.grid_side, self.values - other.values)

    def __mul__(self, scalar: float) -> "TorusSignal":
        return TorusSignal(self.d, self.grid_side, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "TorusSignal":
        return TorusSignal(self.d, self.grid_side, -self.values)

    def _check_compatible(self, other: "TorusSignal") -> None:
        if not isinstance(other, TorusSignal):
            raise TypeError(f"expected TorusSignal, got {type(other).__name__}")
        if (self.d, self.grid_side) != (other.d, other.grid_side):
            raise ValueError("signals live on different grids")


def make_signal(values, d: int | None = None) -> TorusSignal:
    """Build a TorusSignal from an array, inferring the grid when possible.

    A d-dimensional array is taken as-is; a flat array with an explicit d is
    reshaped to the cubic grid.
    """
    arr = np.asarray(values, dtype=np.float64)
    if d is None:
        d = arr.ndim
    if arr.ndim == 1 and d > 1:
        side = round(arr.size ** (1.0 / d))
        if side**d != arr.size:
            raise ValueError(f"flat length {arr.size} is not a perfect d={d} cube")
        arr = arr.reshape((side,) * d)
    if arr.ndim != d:
        raise ValueError(f"array rank {arr.ndim} does not match d={d}")
    if len(set(arr.shape)) != 1:
        raise ValueError(f"grid must be cubic, got shape {arr.shape}")
    return TorusSignal(d, arr.shape[0], arr)


def inner(u: TorusSignal, v: TorusSignal) -> float:
    """Grid inner product N^{-d} sum_i u_i v_i (the Riemann sum of u*v)."""
    u._check_compatible(v)
    return float(np.vdot(u.values, v.values)) / u.n_cells


def lq_norm(s: TorusSignal, q: float) -> float:
    """Riemann L^q norm, (N^{-d} sum |u|^q)^{1/q}; q = inf gives the max."""
    if q == np.inf:
        return float(np.max(np.abs(s.values)))
    q = float(q)
    if not q >= 1.0:
        raise ValueError(f"q must be >= 1 or inf, got {q}")
    return float((np.sum(np.abs(s.values) ** q) / s.n_cells) ** (1.0 / q))


def sup_norm(s: TorusSignal) -> float:
    return lq_norm(s, np.inf)


def forward_differences(arr: np.ndarray) -> np.ndarray:
    """Periodic forward differences along every axis, stacked on a new axis 0.

    Component a at cell i is arr[i + e_a] - arr[i] with wraparound; no grid
    spacing factor is applied.
    """
    return np.stack([np.roll(arr, -1, axis=a) - arr for a in range(arr.ndim)])


def periodic_divergence(field: np.ndarray) -> np.ndarray:
    """Discrete divergence of a stacked field, the negative adjoint of
    forward_differences under the unweighted (and hence any uniformly
    weighted) inner product."""
    out = np.zeros(field.shape[1:], dtype=np.float64)
    for a in range(field.ndim - 1):
        comp = field[a]
        out += comp - np.roll(comp, 1, axis=a)
    return out


def gradient(s: TorusSignal) -> np.ndarray:
    """Forward-difference gradient stack of shape (d,) + grid shape."""
    return forward_differences(s.values)


def divergence(field: np.ndarray, d: int, grid_side: int) -> TorusSignal:
    """Divergence of a (d,)+grid stacked field as a TorusSignal."""
    if field.shape != (d,) + (grid_side,) * d:
        raise ValueError(f"field shape {field.shape} does not match (d={d}, N={grid_side})")
    return TorusSignal(d, grid_side, periodic_divergence(field))


BV_FLAVORS = ("anisotropic", "isotropic")


def bv_seminorm(s: TorusSignal, flavor: str = "anisotropic") -> float:
    """Discrete total variation with cell spacing h = 1/N.

    anisotropic: h^{d-1} * sum over cells and axes of |forward difference|;
    for an indicator this equals the axis-aligned perimeter exactly.
    isotropic: h^{d-1} * sum over cells of the euclidean length of the
    forward-difference vector.
    """
    if flavor not in BV_FLAVORS:
        raise ValueError(f"flavor must be one of {BV_FLAVORS}, got {flavor!r}")
    diffs = forward_differences(s.values)
    weight = float(s.grid_side) ** (1 - s.d)
    if flavor == "anisotropic":
        return float(weight * np.sum(np.abs(diffs)))
    return float(weight * np.sum(np.sqrt(np.sum(diffs**2, axis=0))))
