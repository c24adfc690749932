import numpy as np
import pytest

from mstv.frames import (
    CoefficientVector,
    FrameIndex,
    make_frame,
    read_coefficients,
    write_coefficients,
)
from mstv.grid import inner, lq_norm, make_signal, sup_norm
from mstv.wavelets import WaveletFrame, detail_filter, scaling_filter

from helpers import dense_operator


def test_db2_filter_closed_form():
    h = scaling_filter(2)
    closed = np.array([1 + np.sqrt(3), 3 + np.sqrt(3), 3 - np.sqrt(3), 1 - np.sqrt(3)])
    closed /= 4 * np.sqrt(2)
    assert np.max(np.abs(h - closed)) < 1e-14


@pytest.mark.parametrize("S", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
def test_filter_orthonormality_and_moments(S):
    h = scaling_filter(S)
    g = detail_filter(h)
    assert h.size == 2 * S
    assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-13)
    for m in range(S):
        target = 1.0 if m == 0 else 0.0
        assert np.dot(h[: 2 * S - 2 * m], h[2 * m :]) == pytest.approx(target, abs=1e-13)
    t = np.arange(2 * S, dtype=float)
    for p in range(S):
        row = t**p if p else np.ones(2 * S)
        assert abs(np.dot(g, row)) / np.linalg.norm(row) < 1e-13


def test_filter_generation_bounds():
    with pytest.raises(ValueError):
        scaling_filter(0)
    with pytest.raises(ValueError):
        scaling_filter(11)


def test_regularity_requirement():
    WaveletFrame(1, 1)  # Haar admitted in one dimension only
    with pytest.raises(ValueError):
        WaveletFrame(2, 1)
    with pytest.raises(ValueError):
        WaveletFrame(3, 1)
    WaveletFrame(2, 2)
    WaveletFrame(3, 2)


def test_index_family_cardinality():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    plan = fr.scale_plan(1024, 1024)
    assert plan.levels == 10 and plan.cardinality == 1024
    assert len(fr.index_set(1024, 1024)) == 1024

    fr2 = make_frame("wavelet", 2, vanishing_moments=2)
    plan2 = fr2.scale_plan(4096, 64)
    assert plan2.levels == 6 and plan2.cardinality == 4096

    # non-dyadic budgets: 2^{-d} n <= cardinality <= n
    rng = np.random.default_rng(5)
    for d, fr_d in ((1, fr), (2, fr2)):
        for n in rng.integers(2**d, 4097, size=20):
            n = int(n)
            card = fr_d.scale_plan(n, 4096 if d == 1 else 64).cardinality
            assert n * 2 ** (-d) <= card <= n


def test_index_order_and_father():
    fr = make_frame("wavelet", 2, vanishing_moments=2)
    idx = fr.index_set(16, 8)
    assert idx[0] == FrameIndex(0, (0, 0), (0, 0))
    scales = [i.scale for i in idx]
    assert scales == sorted(scales)
    assert len(idx) == 16
    assert sum(1 for i in idx if not any(i.band)) == 1


def test_grid_too_coarse_rejected():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    with pytest.raises(ValueError):
        fr.scale_plan(1024, 512)
    with pytest.raises(ValueError):
        fr.levels(1)


@pytest.mark.parametrize("d,side,S", [(1, 64, 2), (1, 64, 4), (2, 16, 3)])
def test_analyze_matches_atom_inner_products(d, side, S):
    fr = make_frame("wavelet", d, vanishing_moments=S)
    rng = np.random.default_rng(97 + d + S)
    s = make_signal(rng.normal(size=(side,) * d))
    n = side**d
    coeffs = fr.analyze(s, n)
    for i, ix in enumerate(coeffs.indices):
        atom = fr.atom(ix, side)
        assert coeffs.values[i] == pytest.approx(inner(atom, s), abs=1e-10)


@pytest.mark.parametrize("d,side", [(1, 128), (2, 32), (3, 8)])
def test_parseval_and_round_trip(d, side):
    fr = make_frame("wavelet", d, vanishing_moments=2)
    rng = np.random.default_rng(11 + d)
    s = make_signal(rng.normal(size=(side,) * d))
    n = side**d
    coeffs = fr.analyze(s, n)
    assert np.sum(coeffs.values**2) == pytest.approx(lq_norm(s, 2) ** 2, rel=1e-10)
    back = fr.adjoint(coeffs)
    assert np.max(np.abs(back.values - s.values)) < 1e-10 * max(1, sup_norm(s))


def test_partial_family_adjoint_is_projection():
    fr = make_frame("wavelet", 1, vanishing_moments=3)
    rng = np.random.default_rng(23)
    side, n = 128, 32  # strict subfamily
    s = make_signal(rng.normal(size=side))
    proj = fr.adjoint(fr.analyze(s, n))
    proj2 = fr.adjoint(fr.analyze(proj, n))
    assert np.max(np.abs(proj2.values - proj.values)) < 1e-10
    assert lq_norm(proj, 2) <= lq_norm(s, 2) + 1e-12
    t = make_signal(rng.normal(size=side))
    assert inner(proj, t) == pytest.approx(inner(s, fr.adjoint(fr.analyze(t, n))), abs=1e-12)


def test_adjoint_pairing_identity():
    fr = make_frame("wavelet", 2, vanishing_moments=2)
    rng = np.random.default_rng(41)
    side, n = 16, 64
    x = rng.normal(size=(side, side))
    z = rng.normal(size=fr.cardinality(n, side))
    lhs = np.dot(fr.analyze_values(x, n), z)
    rhs = np.sum(x * fr.adjoint_values(z, n, side)) / side**2
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_analysis_rows_orthonormal_dense():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    side, n = 32, 16
    A = dense_operator(lambda v: fr.analyze_values(v, n), (side,))
    gram = (A * side) @ A.T  # rows orthonormal in the grid inner product
    assert np.max(np.abs(gram - np.eye(A.shape[0]))) < 1e-12
    assert fr.operator_norm(n, side) == 1.0


def test_atoms_unit_norm_and_orthogonal():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    side = 64
    idx = fr.index_set(64, side)
    atoms = np.stack([fr.atom(ix, side).values for ix in idx])
    gram = atoms @ atoms.T / side
    assert np.max(np.abs(gram - np.eye(len(idx)))) < 1e-10


def test_atom_index_validation():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    with pytest.raises(ValueError):
        fr.atom(FrameIndex(2, (0,), (0,)), 64)  # lowpass band above scale 0
    with pytest.raises(ValueError):
        fr.atom(FrameIndex(0, (0, 0), (1, 1)), 64)


@pytest.mark.parametrize("S", [2, 3, 4])
def test_vanishing_moments_annihilate_polynomials(S):
    # finest-scale detail coefficients of a sampled polynomial vanish exactly
    # wherever the filter window does not wrap
    side = 256
    fr = make_frame("wavelet", 1, vanishing_moments=S)
    x = np.arange(side) / side
    poly = sum((0.7 - 0.1 * p) * x**p for p in range(S))
    coeffs = fr.analyze_values(poly, side)
    idx = fr.index_set(side, side)
    finest = [
        i
        for i, ix in enumerate(idx)
        if ix.scale == 7 and any(ix.band) and 2 * ix.position[0] + 2 * S - 1 < side
    ]
    assert len(finest) > side // 4
    assert np.max(np.abs(coeffs[finest])) < 1e-10 * np.max(np.abs(poly))


def test_besov_norm_of_atom_is_one():
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    side = 64
    for ix in (FrameIndex(0, (0,), (0,)), FrameIndex(2, (1,), (1,)), FrameIndex(4, (9,), (1,))):
        atom = fr.atom(ix, side)
        assert fr.besov_sup_norm(atom) == pytest.approx(1.0, rel=1e-10)
    # smoothness weight is flat: scaling the signal scales the norm linearly
    rng = np.random.default_rng(2)
    s = make_signal(rng.normal(size=side))
    assert fr.besov_sup_norm(3.0 * s) == pytest.approx(3 * fr.besov_sup_norm(s), rel=1e-12)


def test_coefficient_tail_bound_with_measured_constant():
    # sup over all scales <= sup over the budget family + C ||s||_inf n^{-1/2}
    fr = make_frame("wavelet", 1, vanishing_moments=3)
    side, n = 256, 64
    C = fr.jackson_constant(n, side)
    assert C > 0
    rng = np.random.default_rng(77)
    for _ in range(25):
        s = make_signal(np.clip(rng.normal(size=side), -3, 3))
        full = fr.besov_sup_norm(s)
        family = float(np.max(np.abs(fr.analyze_values(s.values, n))))
        assert full <= family + C * sup_norm(s) / np.sqrt(n) + 1e-12


def test_coefficient_csv_round_trip(tmp_path):
    fr = make_frame("wavelet", 1, vanishing_moments=2)
    rng = np.random.default_rng(13)
    s = make_signal(rng.normal(size=32))
    coeffs = fr.analyze(s, 16)
    path = tmp_path / "coeffs.csv"
    write_coefficients(path, coeffs, fr)
    back = read_coefficients(path)
    assert back.indices == coeffs.indices
    assert np.array_equal(back.values, coeffs.values)
    assert (back.frame_kind, back.d, back.grid_side, back.n) == ("wavelet", 1, 32, 16)


def test_coefficient_vector_validation():
    with pytest.raises(ValueError):
        CoefficientVector("wavelet", 1, 8, 8, (FrameIndex(0, (0,), (0,)),), np.zeros(3))
