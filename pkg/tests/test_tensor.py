"""Multilinear algebra over the field: mode products, the query collapse,
and the interpolation system solver."""

import numpy as np
import pytest

from blindpir.errors import (
    DegenerateEvaluationPoints,
    DimensionMismatch,
    IndexOutOfRange,
    SingularMatrix,
)
from blindpir.field import FieldSpec, Streams, sample_residues
from blindpir.tensor import (
    FieldMatrix,
    FieldVector,
    Tensor,
    basis_vector,
    collapse,
    cv_matrix,
    mode_m_mul,
    solve,
)


def _rand_tensor(dims, spec, rng):
    size = int(np.prod(dims))
    return Tensor(dims, sample_residues(spec, rng, size), spec)


def _rand_vec(n, spec, rng):
    return FieldVector(sample_residues(spec, rng, n), spec)


def test_mode2_product_worked_example():
    # rows (1,2),(3,4), second-mode vector (1,1): row sums (3, 7) = (3, 0) mod 7
    spec = FieldSpec(7)
    A = Tensor((2, 2), [1, 2, 3, 4], spec)
    b = FieldVector([1, 1], spec)
    out = mode_m_mul(A, 2, b)
    assert out.dims == (2, 1)  # contracted extent stays as 1
    assert out.residues() == [3, 0]


def test_mode_product_by_basis_vector_is_slice():
    # contracting mode m with e_t must pick out exactly the slice at index t
    spec = FieldSpec(11)
    rng = Streams(5).generator("t")
    dims = (2, 3, 2)
    A = _rand_tensor(dims, spec, rng)
    arr = A.residue_array().reshape(dims)
    for m in range(1, 4):
        for t in range(1, dims[m - 1] + 1):
            out = mode_m_mul(A, m, basis_vector(dims[m - 1], t, spec))
            expect = np.take(arr, t - 1, axis=m - 1).reshape(-1)
            assert out.residues() == expect.tolist()


def test_mode_products_commute_across_modes():
    spec = FieldSpec(13)
    rng = Streams(6).generator("t")
    for _ in range(50):
        A = _rand_tensor((3, 2, 4), spec, rng)
        u = _rand_vec(3, spec, rng)
        v = _rand_vec(2, spec, rng)
        w = _rand_vec(4, spec, rng)
        # contracted extents stay in place, so mode numbers never shift
        assert mode_m_mul(mode_m_mul(A, 1, u), 2, v) == mode_m_mul(mode_m_mul(A, 2, v), 1, u)
        assert mode_m_mul(mode_m_mul(A, 1, u), 3, w) == mode_m_mul(mode_m_mul(A, 3, w), 1, u)
        assert mode_m_mul(mode_m_mul(A, 2, v), 3, w) == mode_m_mul(mode_m_mul(A, 3, w), 2, v)


def test_mode_product_multilinear():
    spec = FieldSpec(7)
    rng = Streams(8).generator("t")
    for _ in range(30):
        A = _rand_tensor((2, 3), spec, rng)
        B = _rand_tensor((2, 3), spec, rng)
        u = _rand_vec(3, spec, rng)
        v = _rand_vec(3, spec, rng)
        c = spec.element(sample_residues(spec, rng, 1)[0])
        assert mode_m_mul(A + B, 2, u) == mode_m_mul(A, 2, u) + mode_m_mul(B, 2, u)
        assert mode_m_mul(A, 2, u + v) == mode_m_mul(A, 2, u) + mode_m_mul(A, 2, v)
        assert mode_m_mul(A.scaled(c), 2, u) == mode_m_mul(A, 2, u).scaled(c)
        assert mode_m_mul(A, 2, u.scaled(c)) == mode_m_mul(A, 2, u).scaled(c)


def test_collapse_matches_nested_mode_products():
    spec = FieldSpec(11)
    rng = Streams(9).generator("t")
    A = _rand_tensor((2, 3, 2), spec, rng)
    u, v, w = _rand_vec(2, spec, rng), _rand_vec(3, spec, rng), _rand_vec(2, spec, rng)
    nested = mode_m_mul(mode_m_mul(mode_m_mul(A, 1, u), 2, v), 3, w)
    assert nested.dims == (1, 1, 1)
    assert collapse(A, [u, v, w]) == nested.entry(1, 1, 1)


def test_tensor_entry_and_errors():
    spec = FieldSpec(5)
    A = Tensor((2, 2), [0, 1, 2, 3], spec)
    assert A.entry(1, 1).value == 0
    assert A.entry(2, 1).value == 2
    with pytest.raises(IndexOutOfRange):
        A.entry(3, 1)
    with pytest.raises(DimensionMismatch):
        A.entry(1)
    with pytest.raises(DimensionMismatch):
        Tensor((2, 2), [1, 2, 3], spec)
    with pytest.raises(DimensionMismatch):
        mode_m_mul(A, 1, FieldVector([1, 2, 3], spec))
    with pytest.raises(IndexOutOfRange):
        mode_m_mul(A, 3, FieldVector([1, 2], spec))
    with pytest.raises(IndexOutOfRange):
        basis_vector(2, 3, spec)


def test_cv_matrix_hand_oracle():
    # f=(0,), alpha=(1,2,3), two trailing power columns at q=7:
    # row n is (1/(0-a_n), 1, a_n); inverses of -1,-2,-3 are 6,3,2
    spec = FieldSpec(7)
    C = cv_matrix(FieldVector([0], spec), FieldVector([1, 2, 3], spec), 2)
    assert C.residues() == [6, 1, 1, 3, 1, 2, 2, 1, 3]


def test_cv_matrix_two_message_points():
    # f=(0,1), alpha=(2..6), three power columns at q=11
    spec = FieldSpec(11)
    f = [0, 1]
    alpha = [2, 3, 4, 5, 6]
    C = cv_matrix(FieldVector(f, spec), FieldVector(alpha, spec), 3)
    got = C.residues()
    for n, a in enumerate(alpha):
        row = got[5 * n : 5 * n + 5]
        assert row[0] == pow((f[0] - a) % 11, 9, 11)
        assert row[1] == pow((f[1] - a) % 11, 9, 11)
        assert row[2:] == [1, a % 11, a * a % 11]


def test_cv_matrix_rejects_shared_points():
    spec = FieldSpec(7)
    with pytest.raises(DegenerateEvaluationPoints):
        cv_matrix(FieldVector([1], spec), FieldVector([1, 2], spec), 1)
    with pytest.raises(DegenerateEvaluationPoints):
        cv_matrix(FieldVector([0], spec), FieldVector([2, 2], spec), 1)


def test_solve_round_trip_and_nonsingularity():
    # random distinct point sets; solve then multiply back, exact equality
    for q in (11, 101):
        spec = FieldSpec(q)
        rng = Streams(q).generator("cv")
        for _ in range(200):
            pts = list(np.random.default_rng(int(sample_residues(spec, rng, 1)[0]) + q).permutation(q)[:6])
            f = FieldVector([int(p) for p in pts[:2]], spec)
            alpha = FieldVector([int(p) for p in pts[2:6]], spec)
            C = cv_matrix(f, alpha, 2)
            b = _rand_vec(4, spec, rng)
            x = solve(C, b)
            assert C.mul_vec(x) == b


def test_solve_singular_raises():
    spec = FieldSpec(7)
    M = FieldMatrix(2, 2, [1, 2, 2, 4], spec)  # second row is twice the first
    with pytest.raises(SingularMatrix):
        solve(M, FieldVector([1, 1], spec))


def test_matrix_shape_errors():
    spec = FieldSpec(7)
    with pytest.raises(DimensionMismatch):
        FieldMatrix(2, 2, [1, 2, 3], spec)
    M = FieldMatrix(2, 2, [1, 2, 3, 4], spec)
    with pytest.raises(DimensionMismatch):
        M.mul_vec(FieldVector([1, 2, 3], spec))
    with pytest.raises(IndexOutOfRange):
        M.at(3, 1)
    assert M.at(2, 1).value == 3
    assert M.row(2).residues() == [3, 4]
