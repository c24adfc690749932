"""Independent oracles shared by the test modules.

Everything here recomputes expected values from first principles (direct sums,
dense matrices, generic LP/QP solvers) without calling the code paths under
test, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import numpy as np


def riemann_lq(values: np.ndarray, q: float) -> float:
    """L^q norm by direct Riemann sum over the flat cell list."""
    flat = np.abs(np.asarray(values, dtype=np.float64)).ravel()
    if q == np.inf:
        return float(flat.max())
    return float((np.sum(flat**q) / flat.size) ** (1.0 / q))


def perimeter_tv(values: np.ndarray) -> float:
    """Anisotropic TV by counting jump edges between adjacent cells.

    Walks every periodic nearest-neighbour pair once and accumulates the jump
    magnitude, then applies the h^{d-1} edge weight. Exact for indicators
    (gives the axis-aligned perimeter) and for any piecewise-constant array.
    """
    arr = np.asarray(values, dtype=np.float64)
    side = arr.shape[0]
    total = 0.0
    for axis in range(arr.ndim):
        total += float(np.sum(np.abs(np.roll(arr, -1, axis=axis) - arr)))
    return total * side ** (1 - arr.ndim)


def dense_operator(apply_fn, in_shape, out_size=None):
    """Materialize a linear map as a dense matrix column by column."""
    in_size = int(np.prod(in_shape))
    basis = np.zeros(in_shape, dtype=np.float64)
    cols = []
    for idx in range(in_size):
        basis.flat[idx] = 1.0
        cols.append(np.asarray(apply_fn(basis), dtype=np.float64).ravel().copy())
        basis.flat[idx] = 0.0
    mat = np.stack(cols, axis=1)
    if out_size is not None:
        assert mat.shape[0] == out_size
    return mat


def forward_difference_matrix(side: int) -> np.ndarray:
    """Dense periodic forward-difference matrix for a 1-d grid."""
    eye = np.eye(side)
    return np.roll(eye, -1, axis=1) - eye


def lp_frame_tv_oracle(analysis: np.ndarray, y: np.ndarray, gamma: float, beta: float):
    """d=1 anisotropic frame-constrained TV as a linear program.

    Variables (g, t): minimize sum(t) subject to +-(Dg) <= t,
    |Ag - y| <= gamma and |g| <= beta. Solved by an independent
    generic LP code (HiGHS via scipy).
    """
    from scipy.optimize import linprog

    m, side = analysis.shape
    diff = forward_difference_matrix(side)
    zeros_mt = np.zeros((m, side))
    eye_t = np.eye(side)
    a_ub = np.block(
        [
            [diff, -eye_t],
            [-diff, -eye_t],
            [analysis, zeros_mt],
            [-analysis, zeros_mt],
        ]
    )
    b_ub = np.concatenate(
        [np.zeros(2 * side), y + gamma, gamma - y]
    )
    c = np.concatenate([np.zeros(side), np.ones(side)])
    bounds = [(-beta, beta)] * side + [(0, None)] * side
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    assert res.status == 0, f"LP oracle failed: {res.message}"
    return res.x[:side], float(res.fun)


def qp_rof_oracle(y: np.ndarray, lam: float):
    """d=1 anisotropic quadratic-penalty TV problem as a cone QP.

    Variables (g, t): minimize (1/side)*||g - y||^2 + lam*sum(t)
    subject to +-(Dg) <= t. Solved by an independent interior-point
    QP code (cvxopt)."""
    from cvxopt import matrix, solvers

    side = y.size
    diff = forward_difference_matrix(side)
    eye_t = np.eye(side)
    p_mat = np.zeros((2 * side, 2 * side))
    p_mat[:side, :side] = (2.0 / side) * np.eye(side)
    q_vec = np.concatenate([-2.0 * y / side, lam * np.ones(side)])
    g_mat = np.block([[diff, -eye_t], [-diff, -eye_t]])
    h_vec = np.zeros(2 * side)
    opts = {
        "show_progress": False,
        "abstol": 1e-12,
        "reltol": 1e-12,
        "feastol": 1e-12,
        "maxiters": 200,
    }
    sol = solvers.qp(
        matrix(p_mat), matrix(q_vec), matrix(g_mat), matrix(h_vec), options=opts
    )
    assert sol["status"] in ("optimal", "unknown"), sol["status"]
    x = np.asarray(sol["x"]).ravel()
    g = x[:side]
    objective = float(np.sum((g - y) ** 2) / side + lam * np.sum(np.abs(diff @ g)))
    return g, objective
