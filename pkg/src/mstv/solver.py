"""First-order solvers for total-variation problems on the periodic grid.

Two convex programs share one primal-dual hybrid-gradient engine:

* coefficient-constrained: minimize discrete total variation over signals
  whose frame coefficients stay within a sup-norm tube of radius gamma
  around the observed coefficients, intersected with a sup-norm box;
* quadratic-penalty: squared L2 data term plus lambda times the total
  variation (the classical denoising baseline).

The iteration runs in unweighted Euclidean coordinates: signal values as
they are, frame coefficients rescaled by grid_side**(d/2) so the analysis
block keeps its unit-order operator norm, and the total-variation edge
weight grid_side**(1-d) moved into the dual clamp radius.

Convergence is declared when the scaled primal and dual fixed-point
residuals of the iteration both fall below tolerance (and, for the
constrained problem, the tube holds within feas_tol). The constrained
solve additionally tracks the running average of its iterates and
periodically restarts from it: on polyhedral problems this restart turns
the sublinear saddle-point tail into geometric progress, which is what
lets the residuals reach desk-scale tolerances at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import CoefficientVector, Frame, frame_from_params
from .grid import (
    TorusSignal,
    bv_seminorm,
    forward_differences,
    lq_norm,
    periodic_divergence,
)
from .noise import Observations

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_EMPTY = "empty_feasible_set_convention"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration and tolerance knobs shared by both solvers.

    feas_tol is absolute in coefficient units; None means 1e-6 * gamma
    floored at 1e-12. linf_bound is the sup-norm box radius; None means
    log(sample budget). step_ratio in (0,1) trades primal against dual
    step size at a fixed product. Residuals are evaluated every
    check_every iterations. restart_every is the base averaging window of
    the constrained solver (0 disables restarts; the quadratic-penalty
    solver never restarts).
    """

    max_iters: int = 20000
    feas_tol: float | None = None
    rel_obj_tol: float = 1e-6
    step_ratio: float = 0.5
    linf_bound: float | None = None
    tv_flavor: str = "anisotropic"
    over_relaxation: float = 1.0
    check_every: int = 10
    restart_every: int = 250

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.feas_tol is not None and self.feas_tol <= 0:
            raise ValueError("feas_tol must be positive")
        if self.rel_obj_tol <= 0:
            raise ValueError("rel_obj_tol must be positive")
        if not 0 < self.step_ratio < 1:
            raise ValueError("step_ratio must lie in (0, 1)")
        if self.linf_bound is not None and self.linf_bound <= 0:
            raise ValueError("linf_bound must be positive")
        if self.tv_flavor not in ("anisotropic", "isotropic"):
            raise ValueError(f"unknown tv flavor {self.tv_flavor!r}")
        if not 0 <= self.over_relaxation <= 1:
            raise ValueError("over_relaxation must lie in [0, 1]")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")
        if self.restart_every < 0:
            raise ValueError("restart_every must be >= 0")


@dataclass(frozen=True)
class SolverResult:
    """Solve outcome plus residual history.

    objective is the value of the solved program at the estimate: the bv
    seminorm for the constrained problem, data term plus weighted bv for
    the quadratic-penalty problem; bv always carries the plain seminorm.
    history rows are (iteration, primal_residual, dual_residual,
    feas_residual), sampled every check_every iterations: the primal and
    dual entries are the unscaled fixed-point residual norms of the
    primal-dual iteration, and feas_residual is the sup-norm tube
    violation in coefficient units (0 for the penalty problem).
    """

    estimate: TorusSignal
    objective: float
    bv: float
    feas_residual: float
    iterations: int
    converged: bool
    status: str
    gamma: float | None = None
    linf_bound: float | None = None
    lam: float | None = None
    history: tuple = field(default_factory=tuple)

    def summary_dict(self) -> dict:
        def scrub(x):
            return None if x is None or not math.isfinite(x) else float(x)

        return {
            "objective": scrub(self.objective),
            "bv": scrub(self.bv),
            "feas_residual": scrub(self.feas_residual),
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "gamma": scrub(self.gamma),
            "linf_bound": scrub(self.linf_bound),
            "lam": scrub(self.lam),
            "history": [
                [int(k), scrub(pr), scrub(dr), scrub(fe)]
                for k, pr, dr, fe in self.history
            ],
        }


def _tv_value(diffs: np.ndarray, weight: float, flavor: str) -> float:
    if flavor == "anisotropic":
        return weight * float(np.sum(np.abs(diffs)))
    return weight * float(np.sum(np.sqrt(np.sum(diffs**2, axis=0))))


def _tv_dual_project(p: np.ndarray, radius: float, flavor: str) -> np.ndarray:
    if flavor == "anisotropic":
        return np.clip(p, -radius, radius)
    norms = np.sqrt(np.sum(p**2, axis=0, keepdims=True))
    return p * (radius / np.maximum(radius, norms))


_L1_PROFILES: dict = {}


def atom_l1_profile(frame: Frame, n: int, grid_side: int) -> np.ndarray:
    """Grid L1 norms of all frame atoms in canonical order.

    Atoms sharing (scale, band) are translates of one another, so one
    materialization per group suffices; profiles are cached per frame
    parameterization.
    """
    key = (tuple(sorted(frame.params().items())), n, grid_side)
    cached = _L1_PROFILES.get(key)
    if cached is not None:
        return cached
    indices = frame.index_set(n, grid_side)
    by_group: dict = {}
    out = np.empty(len(indices))
    for i, idx in enumerate(indices):
        group = (idx.scale, idx.band)
        if group not in by_group:
            atom = frame.atom(idx, grid_side)
            by_group[group] = float(np.sum(np.abs(atom.values))) / atom.n_cells
        out[i] = by_group[group]
    out.setflags(write=False)
    _L1_PROFILES[key] = out
    return out


def certify_infeasible(
    frame: Frame, data: CoefficientVector, gamma: float, linf_bound: float
) -> bool:
    """Sound emptiness certificate for the tube-and-box feasible set.

    Any g with sup norm <= beta has |<phi, g>| <= beta * ||phi||_L1, so a
    coefficient with |Y| > gamma + beta * ||phi||_L1 proves no feasible
    point exists. The converse is false: a False return decides nothing.
    """
    profile = atom_l1_profile(frame, data.n, data.grid_side)
    slack = np.abs(data.values) - gamma - linf_bound * profile
    return bool(np.max(slack) > 1e-12 * max(1.0, gamma + linf_bound))


def _recenter_constant(
    u: np.ndarray, au: np.ndarray, dc: np.ndarray, yc: np.ndarray, beta: float
):
    """Canonical tie-break for the constant-shift degeneracy.

    When the frame maps constants to a single coefficient (orthonormal
    wavelet systems: the father entry), adding a constant changes neither
    the TV objective nor any other tube constraint, so the minimizer is
    only determined up to a shift. Recentring that residual to zero,
    clamped to keep the sup-norm box, selects one minimizer
    deterministically. Frames without this structure are left alone.
    """
    support = np.nonzero(np.abs(dc) > 1e-10 * np.max(np.abs(dc)))[0]
    if support.size != 1:
        return u, au
    i = int(support[0])
    shift = (yc[i] - au[i]) / dc[i]
    lo, hi = -beta - float(u.min()), beta - float(u.max())
    shift = min(max(shift, lo), hi)
    return u + shift, au + shift * dc


def solve_frame_constrained_tv(
    obs: Observations, cfg: SolverConfig = SolverConfig()
) -> SolverResult:
    """Minimize discrete TV subject to the coefficient tube and sup box.

    The minimizer set is selected from deterministically: the zero signal
    whenever it is feasible, otherwise the constant-shift tie-break of
    _recenter_constant. Convergence means scaled primal and dual
    fixed-point residuals of the iteration both below rel_obj_tol together
    with tube feasibility within feas_tol. Exhausting max_iters returns
    converged=False with status "max_iters" and diagnostics intact,
    reporting whichever of the last iterate and the running window average
    is better (feasibility first, then objective). A certifiably empty
    feasible set short-circuits to the zero signal with status
    "empty_feasible_set_convention" (also converged=False: nothing was
    minimized).
    """
    frame = frame_from_params(obs.frame_params)
    data, gamma = obs.coefficients, obs.gamma
    if gamma < 0:
        raise ValueError("tube radius gamma must be >= 0")
    d, side, n = data.d, data.grid_side, data.n
    beta = cfg.linf_bound if cfg.linf_bound is not None else math.log(n)
    if beta <= 0:
        raise ValueError("sup-norm box radius must be positive")
    feas_tol = cfg.feas_tol if cfg.feas_tol is not None else max(1e-6 * gamma, 1e-12)

    if certify_infeasible(frame, data, gamma, beta):
        zero = TorusSignal(d, side, np.zeros((side,) * d))
        return SolverResult(
            estimate=zero,
            objective=0.0,
            bv=0.0,
            feas_residual=max(data.max_abs() - gamma, 0.0),
            iterations=0,
            converged=False,
            status=STATUS_EMPTY,
            gamma=gamma,
            linf_bound=beta,
        )

    half = float(side) ** (d / 2.0)
    yc = data.values * half
    gr = gamma * half
    tube_lo, tube_hi = yc - gr, yc + gr
    w = float(side) ** (1 - d)
    theta = cfg.over_relaxation

    op = frame.operator_norm(n, side)
    norm_bound = math.sqrt(4.0 * d + op * op) * (1 + 1e-9)
    tau = 0.99 * cfg.step_ratio / norm_bound
    sig = 0.99 / (cfg.step_ratio * norm_bound)

    def analyze(values):
        return frame.analyze_values(values, n) * half

    def adjoint(coeffs):
        return frame.adjoint_values(coeffs, n, side) / half

    def sup_violation(coeffs):
        return float(np.max(np.maximum(np.abs(coeffs - yc) - gr, 0.0))) / half

    dc = analyze(np.ones((side,) * d))  # coefficient response to a constant shift

    # warm start at the reconstruction of tube-shrunk coefficients: for
    # orthonormal frames this point is already feasible and carries none of
    # the noise TV, and when zero is feasible it IS zero (the canonical
    # selection for that case)
    shrunk = np.sign(yc) * np.maximum(np.abs(yc) - gr, 0.0)
    u = np.clip(adjoint(shrunk), -beta, beta)
    p = np.zeros((d,) + (side,) * d)
    z = np.zeros(len(data))
    du, au = forward_differences(u), analyze(u)
    du_old, au_old = du, au
    kt_cur = None

    sum_u, sum_p, sum_z = np.zeros_like(u), np.zeros_like(p), np.zeros_like(z)
    window = 0
    window_cap = 8 * cfg.restart_every if cfg.restart_every else 0
    mu_last = None

    history = []
    status = STATUS_MAX_ITERS
    iters = 0
    for k in range(cfg.max_iters):
        iters = k + 1
        du_bar = du + theta * (du - du_old)
        au_bar = au + theta * (au - au_old)

        p_new = _tv_dual_project(p + sig * du_bar, w, cfg.tv_flavor)
        zt = z + sig * au_bar
        z_new = zt - sig * np.clip(zt / sig, tube_lo, tube_hi)

        kt_new = -periodic_divergence(p_new) + adjoint(z_new)
        u_new = np.clip(u - tau * kt_new, -beta, beta)
        du_new, au_new = forward_differences(u_new), analyze(u_new)

        if iters % cfg.check_every == 0 or iters == cfg.max_iters:
            feas = sup_violation(au_new)
            if kt_cur is None:
                pr = float("inf")
            else:
                pr = float(np.linalg.norm((u - u_new) / tau - (kt_cur - kt_new)))
            dp = (p - p_new) / sig + du_bar - du_new
            dz = (z - z_new) / sig + au_bar - au_new
            dr = math.hypot(float(np.linalg.norm(dp)), float(np.linalg.norm(dz)))
            history.append((iters, pr, dr, feas))
            pr_scale = 1.0 + float(np.linalg.norm(kt_new))
            dr_scale = 1.0 + math.hypot(
                float(np.linalg.norm(du_new)), float(np.linalg.norm(au_new))
            )
            if (
                feas <= feas_tol
                and pr <= cfg.rel_obj_tol * pr_scale
                and dr <= cfg.rel_obj_tol * dr_scale
            ):
                u, du, au = u_new, du_new, au_new
                status = STATUS_CONVERGED
                break
            mu = max(pr / pr_scale, dr / dr_scale, feas / max(gamma, feas_tol))
        else:
            mu = None

        du_old, au_old = du, au
        u, p, z = u_new, p_new, z_new
        du, au = du_new, au_new
        kt_cur = kt_new
        sum_u += u
        sum_p += p
        sum_z += z
        window += 1

        if (
            cfg.restart_every
            and mu is not None
            and math.isfinite(mu)
            and ((mu_last is not None and mu <= 0.5 * mu_last) or window >= window_cap)
        ):
            u, p, z = sum_u / window, sum_p / window, sum_z / window
            du, au = forward_differences(u), analyze(u)
            du_old, au_old = du, au
            kt_cur = None
            for arr in (sum_u, sum_p, sum_z):
                arr[:] = 0.0
            window = 0
            mu_last = mu

    if status != STATUS_CONVERGED and window > 0:
        # deterministic pick between the last iterate and the window
        # average: feasibility within tolerance first, then lower objective
        u_avg = sum_u / window
        au_avg = analyze(u_avg)
        cands = [(u, au), (u_avg, au_avg)]
        scored = []
        for uu, aa in cands:
            fv = sup_violation(aa)
            tv = _tv_value(forward_differences(uu), w, cfg.tv_flavor)
            scored.append((fv > feas_tol, tv if fv <= feas_tol else fv, uu, aa))
        scored.sort(key=lambda t: (t[0], t[1]))
        u, au = scored[0][2], scored[0][3]
        du = forward_differences(u)

    if data.max_abs() > gamma:
        u, au = _recenter_constant(u, au, dc, yc, beta)
    estimate = TorusSignal(d, side, u)
    bv = bv_seminorm(estimate, cfg.tv_flavor)
    feas = sup_violation(au)
    return SolverResult(
        estimate=estimate,
        objective=bv,
        bv=bv,
        feas_residual=feas,
        iterations=iters,
        converged=status == STATUS_CONVERGED,
        status=status,
        gamma=gamma,
        linf_bound=beta,
        history=tuple(history),
    )


def solve_rof(
    pixels: TorusSignal, lam: float, cfg: SolverConfig = SolverConfig()
) -> SolverResult:
    """Minimize squared grid-L2 distance to pixels plus lam times TV.

    Convergence means scaled primal and dual fixed-point residuals of the
    iteration both below rel_obj_tol; the data term makes the problem
    strongly convex, so the plain iteration converges without restarts.
    """
    if lam <= 0:
        raise ValueError("penalty weight lam must be positive")
    d, side = pixels.d, pixels.grid_side
    y = pixels.values
    w = float(side) ** (1 - d)
    cells = float(side**d)
    theta = cfg.over_relaxation
    radius = lam * w

    norm_bound = math.sqrt(4.0 * d) * (1 + 1e-9)
    tau = 0.99 * cfg.step_ratio / norm_bound
    sig = 0.99 / (cfg.step_ratio * norm_bound)
    pull = 2.0 * tau / cells  # prox weight of the squared data term

    u = y.copy()
    p = np.zeros((d,) + (side,) * d)
    du = forward_differences(u)
    du_old = du
    kt_cur = None

    history = []
    status = STATUS_MAX_ITERS
    iters = 0
    for k in range(cfg.max_iters):
        iters = k + 1
        du_bar = du + theta * (du - du_old)
        p_new = _tv_dual_project(p + sig * du_bar, radius, cfg.tv_flavor)
        kt_new = -periodic_divergence(p_new)
        u_new = (u - tau * kt_new + pull * y) / (1.0 + pull)
        du_new = forward_differences(u_new)

        if iters % cfg.check_every == 0 or iters == cfg.max_iters:
            if kt_cur is None:
                pr = float("inf")
            else:
                pr = float(np.linalg.norm((u - u_new) / tau - (kt_cur - kt_new)))
            dr = float(np.linalg.norm((p - p_new) / sig + du_bar - du_new))
            history.append((iters, pr, dr, 0.0))
            prim_scale = 1.0 + float(np.linalg.norm(kt_new))
            dual_scale = 1.0 + float(np.linalg.norm(du_new))
            if pr <= cfg.rel_obj_tol * prim_scale and dr <= cfg.rel_obj_tol * dual_scale:
                u, du = u_new, du_new
                status = STATUS_CONVERGED
                break

        du_old = du
        u, du, p, kt_cur = u_new, du_new, p_new, kt_new

    estimate = TorusSignal(d, side, u)
    bv = bv_seminorm(estimate, cfg.tv_flavor)
    objective = lq_norm(estimate - pixels, 2) ** 2 + lam * bv
    return SolverResult(
        estimate=estimate,
        objective=objective,
        bv=bv,
        feas_residual=0.0,
        iterations=iters,
        converged=status == STATUS_CONVERGED,
        status=status,
        lam=lam,
        history=tuple(history),
    )


def bregman_tv_divergence(
    a: TorusSignal, b: TorusSignal, flavor: str = "anisotropic"
) -> float:
    """Symmetrized Bregman divergence of the discrete TV seminorm.

    Subgradients pick the sign pattern of forward differences with
    sign(0) = 0 (anisotropic) or the normalized cell gradient with zero
    on vanishing cells (isotropic).
    """
    if a.d != b.d or a.grid_side != b.grid_side:
        raise ValueError("signals live on different grids")
    da, db = forward_differences(a.values), forward_differences(b.values)
    w = float(a.grid_side) ** (1 - a.d)
    if flavor == "anisotropic":
        qa, qb = np.sign(da), np.sign(db)
    elif flavor == "isotropic":
        na = np.sqrt(np.sum(da**2, axis=0, keepdims=True))
        nb = np.sqrt(np.sum(db**2, axis=0, keepdims=True))
        qa = np.where(na > 0, da / np.where(na > 0, na, 1.0), 0.0)
        qb = np.where(nb > 0, db / np.where(nb > 0, nb, 1.0), 0.0)
    else:
        raise ValueError(f"unknown tv flavor {flavor!r}")
    return w * float(np.sum((qa - qb) * (da - db)))


@dataclass(frozen=True)
class SweepResult:
    lambdas: tuple
    losses: tuple
    best_index: int
    best_lambda: float
    results: tuple


def oracle_lambda_sweep(
    pixels: TorusSignal,
    truth: TorusSignal,
    lambdas,
    divergence: str = "l2",
    cfg: SolverConfig = SolverConfig(),
) -> SweepResult:
    """Solve the quadratic-penalty problem on a lambda grid and report the
    grid minimizer of the chosen divergence to the truth.

    Benchmark-only utility: real data never reveals the truth, so this
    oracle gives the baseline an advantage by construction. Ties resolve
    to the earliest grid entry.
    """
    lambdas = tuple(float(l) for l in lambdas)
    if not lambdas:
        raise ValueError("lambda grid must be nonempty")
    if divergence not in ("l2", "bregman_tv"):
        raise ValueError(f"unknown divergence {divergence!r}")
    results = []
    losses = []
    for lam in lambdas:
        res = solve_rof(pixels, lam, cfg)
        results.append(res)
        if divergence == "l2":
            losses.append(lq_norm(res.estimate - truth, 2))
        else:
            losses.append(bregman_tv_divergence(res.estimate, truth, cfg.tv_flavor))
    best = int(np.argmin(losses))
    return SweepResult(
        lambdas=lambdas,
        losses=tuple(losses),
        best_index=best,
        best_lambda=lambdas[best],
        results=tuple(results),
    )
