"""Monte Carlo risk benchmarks and theory diagnostics.

Covers four jobs: seeded risk estimation over a ladder of sample budgets
with exact-OLS rate fitting, interpolation-inequality ratio reports,
sign-flip hard-instance families with certified amplitudes, and the
closed-form target exponent the fitted slopes are compared against.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from .frames import FrameIndex, frame_from_params
from .grid import TorusSignal, bv_seminorm, is_power_of_two, lq_norm, sup_norm
from .noise import NoiseSpec, noise_stream, observe, truth_feasible
from .solver import (
    STATUS_MAX_ITERS,
    SolverConfig,
    oracle_lambda_sweep,
    solve_frame_constrained_tv,
)
from .truths import truth_library
from .wavelets import WaveletFrame, _band_patterns

ESTIMATORS = ("frame_tv", "rof_oracle", "wavelet_threshold", "identity")

DEFAULT_FRAME = {"kind": "wavelet", "vanishing_moments": 2}


def target_exponent(d: int, q: float) -> float:
    """Risk rate exponent -min{1/(d+2), 1/(dq)}; kink at q = 1 + 2/d."""
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d}")
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    return -min(1.0 / (d + 2), 1.0 / (d * q))


# -- experiment configuration ----------------------------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    """One seeded risk experiment: estimator, model, and ladder of budgets.

    grid_side None derives the grid from each budget (n must be a d-th
    power of a power of two); a pinned grid_side fixes the resolution and
    admits any n <= grid_side**d. rof_lambdas None uses a geometric grid
    bracketing the pixel noise level.
    """

    d: int
    q: float
    truth: str
    sigma: float
    ladder: tuple
    replicates: int
    estimator: str = "frame_tv"
    truth_params: dict = field(default_factory=dict)
    frame_params: dict = field(default_factory=dict)
    kappa: float = math.sqrt(2.0)
    solver: SolverConfig = SolverConfig()
    seed: int = 202
    grid_side: int | None = None
    rof_lambdas: tuple | None = None

    def __post_init__(self):
        if int(self.d) != self.d or not 1 <= self.d <= 3:
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if not self.q >= 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        object.__setattr__(self, "q", float(self.q))
        if self.estimator not in ESTIMATORS:
            raise ValueError(
                f"unknown estimator {self.estimator!r}, expected one of {ESTIMATORS}"
            )
        object.__setattr__(self, "ladder", tuple(int(n) for n in self.ladder))
        if not self.ladder:
            raise ValueError("ladder must be nonempty")
        if any(b <= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ValueError("ladder must be strictly increasing")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for n in self.ladder:
            self.grid_for(n)
        if self.rof_lambdas is not None:
            object.__setattr__(
                self, "rof_lambdas", tuple(float(l) for l in self.rof_lambdas)
            )
            if not all(l > 0 for l in self.rof_lambdas):
                raise ValueError("rof_lambdas must be positive")

    def grid_for(self, n: int) -> int:
        """Grid side used for budget n; rejects unresolvable ladder points."""
        if self.grid_side is not None:
            if n > self.grid_side**self.d:
                raise ValueError(
                    f"budget n={n} exceeds the pinned grid's {self.grid_side**self.d} cells"
                )
            return self.grid_side
        exponent = n.bit_length() - 1
        if not is_power_of_two(n) or exponent % self.d != 0:
            raise ValueError(
                f"budget n={n} is not a d-th power of a power of two for d={self.d}; "
                "pin grid_side to decouple budget from resolution"
            )
        return 2 ** (exponent // self.d)

    def frame(self):
        params = dict(DEFAULT_FRAME, **self.frame_params)
        params["d"] = self.d
        return frame_from_params(params)


@dataclass(frozen=True)
class PointRisk:
    n: int
    mean_risk: float
    stderr: float
    reps: int
    feas_freq: float
    converged_frac: float


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    intercept: float


@dataclass(frozen=True)
class RiskReport:
    """Ladder risks plus rate fits against the target exponent.

    fit uses every successful ladder point; fit_drop_smallest is present
    when the pre-asymptotic curvature guard fired (quadratic log-log term
    significant at 5%) and refits without the smallest budget. slope()
    returns the guard-selected slope.
    """

    spec: ExperimentSpec
    points: tuple
    target: float
    fit: RateFit | None = None
    fit_drop_smallest: RateFit | None = None
    curvature_fired: bool = False
    notes: tuple = ()

    def slope(self) -> float | None:
        chosen = self.fit_drop_smallest if self.curvature_fired else self.fit
        return None if chosen is None else chosen.slope

    def to_csv(self) -> str:
        lines = ["d,q,n,estimator,mean_risk,stderr,reps,feas_freq,converged_frac"]
        for p in self.points:
            lines.append(
                f"{self.spec.d},{self.spec.q!r},{p.n},{self.spec.estimator},"
                f"{p.mean_risk!r},{p.stderr!r},{p.reps},{p.feas_freq!r},"
                f"{p.converged_frac!r}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def encode(obj):
            if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
                return {
                    k: encode(v) for k, v in dataclasses.asdict(obj).items()
                }
            if isinstance(obj, tuple):
                return [encode(v) for v in obj]
            if isinstance(obj, float) and not math.isfinite(obj):
                return None
            return obj

        payload = {
            "spec": encode(self.spec),
            "points": [encode(p) for p in self.points],
            "target_exponent": self.target,
            "fit": encode(self.fit),
            "fit_drop_smallest": encode(self.fit_drop_smallest),
            "curvature_fired": self.curvature_fired,
            "slope": self.slope(),
            "notes": list(self.notes),
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


# -- estimators -------------------------------------------------------------


def _default_rof_grid(sigma_pixel: float) -> tuple:
    return tuple(sigma_pixel * 2.0**k for k in range(-6, 3))


def _run_replicate(spec: ExperimentSpec, frame, truth, n: int, stream_index: int):
    noise = NoiseSpec(sigma=spec.sigma, n=n, kappa=spec.kappa)
    obs = observe(truth, frame, noise, spec.seed, stream_index)
    feasible = truth_feasible(truth, frame, obs)
    if spec.estimator == "frame_tv":
        res = solve_frame_constrained_tv(obs, spec.solver)
        estimate = res.estimate
        converged = res.converged
        excluded = (not converged) and res.status == STATUS_MAX_ITERS
    elif spec.estimator == "wavelet_threshold":
        y = obs.coefficients.values
        shrunk = np.sign(y) * np.maximum(np.abs(y) - obs.gamma, 0.0)
        estimate = TorusSignal(
            truth.d, truth.grid_side, frame.adjoint_values(shrunk, n, truth.grid_side)
        )
        converged, excluded = True, False
    elif spec.estimator == "identity":
        estimate = obs.pixels
        converged, excluded = True, False
    else:  # rof_oracle
        lambdas = spec.rof_lambdas
        if lambdas is None:
            sigma_pixel = spec.sigma * math.sqrt(truth.n_cells / n)
            lambdas = _default_rof_grid(sigma_pixel)
        sweep = oracle_lambda_sweep(obs.pixels, truth, lambdas, cfg=spec.solver)
        estimate = sweep.results[sweep.best_index].estimate
        converged = all(r.converged for r in sweep.results)
        excluded = not converged
    risk = lq_norm(estimate - truth, spec.q)
    return risk, feasible, converged, excluded


def estimate_risk(spec: ExperimentSpec, threads: int = 1) -> RiskReport:
    """Monte Carlo mean L^q risks over the ladder, with rate fits.

    Deterministic given spec.seed: replicate r of ladder point i draws
    noise from the stream (seed, i*replicates + r) regardless of thread
    count, and aggregation reduces in replicate order. Replicates whose
    solve reports converged=false with status "max_iters" are counted and
    excluded with a note; more than 5% exclusions across the run raises.
    The zero-signal convention for a certified-empty feasible set is valid
    estimator output and stays included.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    points = []
    notes = []
    total, total_excluded = 0, 0
    for point_index, n in enumerate(spec.ladder):
        side = spec.grid_for(n)
        truth, _info = truth_library(spec.truth, spec.d, side, **spec.truth_params)
        frame = spec.frame()

        def job(rep, _n=n, _frame=frame, _truth=truth, _pi=point_index):
            return _run_replicate(
                spec, _frame, _truth, _n, _pi * spec.replicates + rep
            )

        reps = range(spec.replicates)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(job, reps))
        else:
            rows = [job(r) for r in reps]

        risks = [r for r, _f, _c, excl in rows if not excl]
        feas = [f for _r, f, _c, _e in rows]
        conv = [c for _r, _f, c, _e in rows]
        excluded = spec.replicates - len(risks)
        total += spec.replicates
        total_excluded += excluded
        if excluded:
            message = (
                f"n={n}: excluded {excluded}/{spec.replicates} non-converged replicates"
            )
            notes.append(message)
            warnings.warn(message, RuntimeWarning, stacklevel=2)
        mean = float(np.mean(risks)) if risks else float("nan")
        stderr = (
            float(np.std(risks, ddof=1) / math.sqrt(len(risks)))
            if len(risks) >= 2
            else 0.0
        )
        points.append(
            PointRisk(
                n=n,
                mean_risk=mean,
                stderr=stderr,
                reps=len(risks),
                feas_freq=float(np.mean(feas)),
                converged_frac=float(np.mean(conv)),
            )
        )
    if total_excluded > 0.05 * total:
        raise RuntimeError(
            f"risk run failed: {total_excluded}/{total} replicates excluded "
            "(non-converged beyond the 5% budget); loosen the solver config "
            "or raise max_iters"
        )

    usable = [(p.n, p.mean_risk) for p in points if p.reps > 0 and p.mean_risk > 0]
    fit = drop = None
    fired = False
    if len(usable) >= 3:
        fit = RateFit(*fit_rate(usable))
        fired, _tstat = _curvature_fires(usable)
        if fired:
            drop = RateFit(*fit_rate(usable[1:]))
    return RiskReport(
        spec=spec,
        points=tuple(points),
        target=target_exponent(spec.d, spec.q),
        fit=fit,
        fit_drop_smallest=drop,
        curvature_fired=fired,
        notes=tuple(notes),
    )


# -- rate fitting -----------------------------------------------------------


def fit_rate(ladder) -> tuple:
    """Exact OLS of log risk on log n: (slope, stderr, intercept)."""
    pts = [(float(n), float(r)) for n, r in ladder]
    if len(pts) < 3:
        raise ValueError("rate fit needs at least 3 ladder points")
    if any(n <= 0 or r <= 0 for n, r in pts):
        raise ValueError("rate fit needs positive budgets and risks")
    x = np.log([n for n, _ in pts])
    y = np.log([r for _, r in pts])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 0:
        raise ValueError("degenerate ladder: budgets must not repeat")
    slope = float((xc @ (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = len(pts) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr, intercept


def _curvature_fires(ladder, level: float = 0.05):
    """Quadratic-term t-test on the log-log fit; needs >= 4 points."""
    if len(ladder) < 4:
        return False, 0.0
    x = np.log([float(n) for n, _ in ladder])
    y = np.log([float(r) for _, r in ladder])
    X = np.stack([np.ones_like(x), x, x * x], axis=1)
    gram = X.T @ X
    if np.linalg.cond(gram) > 1e12:
        return False, 0.0
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(x) - 3
    if dof < 1:
        return False, 0.0
    var = float(resid @ resid) / dof
    cov = var * np.linalg.inv(gram)
    se = math.sqrt(max(cov[2, 2], 0.0))
    if se == 0.0:
        # residual-free quadratic: fire on any real curvature coefficient
        return abs(float(coef[2])) > 1e-12, math.inf
    tstat = float(coef[2] / se)
    crit = float(scipy_stats.t.ppf(1.0 - level / 2.0, dof))
    return abs(tstat) > crit, tstat


# -- interpolation diagnostics ----------------------------------------------


def check_interpolation(
    s: TorusSignal,
    d: int,
    q: float,
    n: int | None = None,
    frame: WaveletFrame | None = None,
) -> dict:
    """Ratio of lq norm to the interpolation bound's right-hand side.

    The bound's constant is nonconstructive, so the ratio is reported,
    never asserted; it is 0-homogeneous in s. For d >= 2 the bound is
    besov^{2/(d+2)} * (l1 + bv)^{d/(d+2)} with q <= (d+2)/d; for d = 1 it
    is log(n) * besov^{2/3} * (l1+bv)^{1/3} + (1/n) * sup^{2/3} *
    (l1+bv)^{1/3} with q <= 3 and n defaulting to the cell count.
    """
    if s.d != d:
        raise ValueError(f"signal has d={s.d}, diagnostic called with d={d}")
    if not np.any(s.values):
        raise ValueError("interpolation ratio is undefined for the zero signal")
    if not q >= 1:
        raise ValueError("q must be >= 1")
    limit = 3.0 if d == 1 else (d + 2) / d
    if q > limit + 1e-12:
        raise ValueError(f"interpolation bound requires q <= {limit} for d={d}")
    if frame is None:
        frame = WaveletFrame(d, 2)
    besov = frame.besov_sup_norm(s)
    bv_full = lq_norm(s, 1) + bv_seminorm(s)
    numerator = lq_norm(s, q)
    if d >= 2:
        denom = besov ** (2.0 / (d + 2)) * bv_full ** (d / (d + 2.0))
        terms = {"besov_term": denom}
    else:
        if n is None:
            n = s.n_cells
        if n < 2:
            raise ValueError("d=1 diagnostic needs n >= 2")
        main = math.log(n) * besov ** (2.0 / 3) * bv_full ** (1.0 / 3)
        tail = (1.0 / n) * sup_norm(s) ** (2.0 / 3) * bv_full ** (1.0 / 3)
        denom = main + tail
        terms = {"besov_term": main, "sup_term": tail, "n": int(n)}
    return {
        "d": d,
        "q": float(q),
        "ratio": numerator / denom,
        "numerator": numerator,
        "denominator": denom,
        "besov": besov,
        "bv_full": bv_full,
        **terms,
    }


def interpolation_corpus(d: int, count: int, grid_side: int, seed: int = 7) -> tuple:
    """Frozen corpus of random piecewise-constant signals for the
    empirical-constant sweep; deterministic given (d, count, grid_side,
    seed)."""
    if d not in (1, 2):
        raise ValueError("corpus generator supports d = 1 and 2")
    if count < 1 or grid_side < 8:
        raise ValueError("count must be >= 1 and grid_side >= 8")
    out = []
    for i in range(count):
        rng = noise_stream(seed, i)
        vals = np.zeros((grid_side,) * d)
        pieces = int(rng.integers(1, 5))
        for _ in range(pieces):
            height = float(rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0]))
            if d == 1:
                a, b = np.sort(rng.integers(0, grid_side, size=2))
                vals[a : b + 1] += height
            else:
                ax, bx = np.sort(rng.integers(0, grid_side, size=2))
                ay, by = np.sort(rng.integers(0, grid_side, size=2))
                if rng.uniform() < 0.5:
                    vals[ax : bx + 1, ay : by + 1] += height
                else:
                    cx, cy = (ax + bx) / 2.0, (ay + by) / 2.0
                    radius = max((bx - ax), (by - ay)) / 2.0 + 0.5
                    ii, jj = np.indices(vals.shape)
                    vals[(ii - cx) ** 2 + (jj - cy) ** 2 <= radius**2] += height
        if not np.any(vals):
            vals.flat[0] = 1.0
        out.append(TorusSignal(d, grid_side, vals))
    return tuple(out)


# -- sign-flip hard instances -------------------------------------------------


def _assouad_layout(frame: WaveletFrame, j: int, grid_side: int):
    d = frame.d
    if not 0 <= j < int(math.log2(grid_side)):
        raise ValueError(f"scale j={j} not resolvable on grid side {grid_side}")
    stride = 2 * frame.vanishing_moments - 1
    per_axis = (2**j) // stride
    capacity = per_axis**d
    count = int(2 ** (j * (d - 1)))  # S_j with Delta = d-1
    if count > capacity:
        raise ValueError(
            f"scale j={j} offers {capacity} disjoint atoms, need {count}"
        )
    band = next(b for b in _band_patterns(d, include_zero=False) if any(b))
    positions = []
    for flat in range(count):
        k = []
        rem = flat
        for _ in range(d):
            k.append((rem % per_axis) * stride)
            rem //= per_axis
        positions.append(tuple(k))
    return band, tuple(positions)


def assouad_max_amplitude(
    d: int,
    j: int,
    g0: TorusSignal,
    L: float = 1.0,
    frame: WaveletFrame | None = None,
) -> float:
    """Largest flip amplitude passing both balance bounds and the numeric
    sup and bv certificates for the emitted family."""
    if frame is None:
        frame = WaveletFrame(d, 2)
    if g0.d != d:
        raise ValueError("g0 dimension mismatch")
    band, positions = _assouad_layout(frame, j, g0.grid_side)
    atom = frame.atom(FrameIndex(j, positions[0], band), g0.grid_side)
    delta_exp = d - 1
    mother_sup = sup_norm(atom) / 2 ** (j * d / 2.0)
    balance_besov = (L / 2.0) * 2.0 ** (-j * (1 - d / 2.0 + delta_exp))
    balance_sup = (L / (2.0 * mother_sup)) * 2.0 ** (-j * d / 2.0)
    sup_budget = (L - sup_norm(g0)) / sup_norm(atom)
    bv_budget = (L - bv_seminorm(g0)) / (len(positions) * bv_seminorm(atom))
    return min(balance_besov, balance_sup, sup_budget, bv_budget)


def assouad_family(
    d: int,
    j: int,
    gamma_amp: float,
    g0: TorusSignal,
    count: int,
    L: float = 1.0,
    frame: WaveletFrame | None = None,
) -> list:
    """Sign-flip perturbations of g0 over disjoint-support scale-j atoms.

    Emits the first `count` sign patterns in binary order (bit b of the
    pattern index flips atom b). The amplitude must pass the certificates
    of assouad_max_amplitude; every emitted signal then satisfies the
    sup <= L and bv <= L bounds numerically.
    """
    if frame is None:
        frame = WaveletFrame(d, 2)
    if not gamma_amp > 0:
        raise ValueError("flip amplitude must be positive")
    if sup_norm(g0) > L / 2 or bv_seminorm(g0) > L / 2:
        raise ValueError("base signal must satisfy the L/2 sup and bv bounds")
    limit = assouad_max_amplitude(d, j, g0, L, frame)
    if gamma_amp > limit * (1 + 1e-12):
        raise ValueError(
            f"amplitude {gamma_amp} violates the certificates (max {limit})"
        )
    band, positions = _assouad_layout(frame, j, g0.grid_side)
    if not 1 <= count <= 2 ** len(positions):
        raise ValueError(f"count must lie in [1, {2 ** len(positions)}]")
    atoms = [
        frame.atom(FrameIndex(j, k, band), g0.grid_side).values for k in positions
    ]
    out = []
    for pattern in range(count):
        vals = g0.values.copy()
        for bit, atom_vals in enumerate(atoms):
            sign = -1.0 if (pattern >> bit) & 1 else 1.0
            vals = vals + sign * gamma_amp * atom_vals
        out.append(TorusSignal(d, g0.grid_side, vals))
    return out


def assouad_separation(
    d: int,
    j: int,
    gamma_amp: float,
    q: float,
    grid_side: int,
    frame: WaveletFrame | None = None,
) -> float:
    """Per-coordinate L^q separation delta, from the materialized atom.

    Two family members differing in m sign flips are exactly
    2 * delta * m**(1/q) apart in L^q thanks to disjoint atom supports;
    at q = 2 delta equals the flip amplitude.
    """
    if frame is None:
        frame = WaveletFrame(d, 2)
    band, positions = _assouad_layout(frame, j, grid_side)
    atom = frame.atom(FrameIndex(j, positions[0], band), grid_side)
    return gamma_amp * lq_norm(atom, q)
