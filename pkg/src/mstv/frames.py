"""Dictionary frames over the periodic grid: shared types and the factory.

A frame exposes a finite index family that grows with the sample budget n,
an analysis map (inner products of a signal against unit-norm atoms), and
its adjoint. Atoms are normalized in the grid L2 inner product, while
coefficient vectors pair with the plain dot product.
"""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import TorusSignal


class FrameIndex(NamedTuple):
    """Canonical atom label: dyadic/m-adic scale, position tuple, band tuple.

    Wavelet atoms carry the lowpass/highpass band pattern in `band`; the
    translation-only dictionary uses an empty band tuple and stores the
    offset numerators in `position`.
    """

    scale: int
    position: tuple
    band: tuple


@dataclass(frozen=True)
class ScalePlan:
    """Resolved multiscale layout for a frame at sample budget n."""

    levels: int
    cardinality: int
    offset_resolution: int | None = None
    resolution_capped: bool = False
    position_snapped: bool = False


@dataclass(frozen=True)
class CoefficientVector:
    """Analysis coefficients of one signal against one frame index family."""

    frame_kind: str
    d: int
    grid_side: int
    n: int
    indices: tuple
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size != len(self.indices):
            raise ValueError("coefficient values must be flat and aligned with indices")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "indices", tuple(self.indices))

    def __len__(self) -> int:
        return self.values.size

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self) else 0.0


class Frame(ABC):
    """Abstract multiscale dictionary bound to a spatial dimension."""

    kind: str
    d: int

    @abstractmethod
    def scale_plan(self, n: int, grid_side: int) -> ScalePlan: ...

    @abstractmethod
    def index_set(self, n: int, grid_side: int) -> tuple: ...

    @abstractmethod
    def analyze_values(self, arr: np.ndarray, n: int) -> np.ndarray:
        """Flat coefficient array in canonical index order."""

    @abstractmethod
    def adjoint_values(self, coeff: np.ndarray, n: int, grid_side: int) -> np.ndarray:
        """Adjoint of analyze_values under (grid L2, plain dot) pairings."""

    @abstractmethod
    def atom(self, index: FrameIndex, grid_side: int) -> TorusSignal:
        """Materialize one unit grid-L2-norm atom."""

    @abstractmethod
    def operator_norm(self, n: int, grid_side: int) -> float:
        """Largest singular value of analysis, grid L2 in, plain dot out."""

    @abstractmethod
    def params(self) -> dict:
        """JSON-safe construction parameters (kind and d included)."""

    def cardinality(self, n: int, grid_side: int) -> int:
        return self.scale_plan(n, grid_side).cardinality

    def analyze(self, s: TorusSignal, n: int) -> CoefficientVector:
        if s.d != self.d:
            raise ValueError(f"frame is for d={self.d}, signal has d={s.d}")
        vals = self.analyze_values(s.values, n)
        return CoefficientVector(
            self.kind, self.d, s.grid_side, n, self.index_set(n, s.grid_side), vals
        )

    def adjoint(self, coeffs: CoefficientVector) -> TorusSignal:
        if coeffs.frame_kind != self.kind or coeffs.d != self.d:
            raise ValueError("coefficient vector belongs to a different frame")
        expected = self.index_set(coeffs.n, coeffs.grid_side)
        if coeffs.indices != expected:
            raise ValueError("coefficient index family does not match this frame layout")
        vals = self.adjoint_values(coeffs.values, coeffs.n, coeffs.grid_side)
        return TorusSignal(self.d, coeffs.grid_side, vals)


FRAME_KINDS = ("wavelet", "madic")


def make_frame(kind: str, d: int, **params) -> Frame:
    """Build a frame by kind: 'wavelet' (periodized Daubechies tensor basis)
    or 'madic' (overlapping smoothed-cube system)."""
    if kind == "wavelet":
        from .wavelets import WaveletFrame

        return WaveletFrame(d, **params)
    if kind == "madic":
        from .madic import MadicFrame

        return MadicFrame(d, **params)
    raise ValueError(f"unknown frame kind {kind!r}, expected one of {FRAME_KINDS}")


def frame_from_params(params: dict) -> Frame:
    p = dict(params)
    return make_frame(p.pop("kind"), p.pop("d"), **p)


def write_coefficients(path, coeffs: CoefficientVector, frame: Frame) -> None:
    """CSV rows (scale, position, band, value) plus a metadata comment line."""
    meta = ";".join(f"{k}={v}" for k, v in sorted(frame.params().items()))
    with open(path, "w", newline="") as fh:
        fh.write(f"# grid_side={coeffs.grid_side};n={coeffs.n};{meta}\n")
        writer = csv.writer(fh)
        writer.writerow(["scale", "position", "band", "value"])
        for idx, val in zip(coeffs.indices, coeffs.values):
            pos = ";".join(str(c) for c in idx.position)
            band = ";".join(str(b) for b in idx.band)
            writer.writerow([idx.scale, pos, band, repr(float(val))])


def read_coefficients(path) -> CoefficientVector:
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing coefficient metadata line")
        meta = dict(item.split("=", 1) for item in header[1:].strip().split(";"))
        rows = list(csv.reader(fh))
    if rows[0] != ["scale", "position", "band", "value"]:
        raise ValueError("unexpected coefficient CSV header")
    indices = []
    values = []
    for scale, pos, band, val in rows[1:]:
        position = tuple(int(c) for c in pos.split(";")) if pos else ()
        bandt = tuple(int(b) for b in band.split(";")) if band else ()
        indices.append(FrameIndex(int(scale), position, bandt))
        values.append(float(val))
    return CoefficientVector(
        meta["kind"],
        int(meta["d"]),
        int(meta["grid_side"]),
        int(meta["n"]),
        tuple(indices),
        np.array(values),
    )
