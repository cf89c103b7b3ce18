import numpy as np
import pytest

from dynsbm.errors import DimensionMismatchError, InvalidBasisError
from dynsbm.transform import (
    TemporalBasis, check_h_assumption, coefficient_operator, cosine_basis, dct_basis,
    from_coefficients, get_basis, haar_basis, support_of, to_coefficients, truncate, vec,
    walsh_basis,
)


def test_l1():
    assert dct_basis(1).matrix.tolist() == [[1.0]]


def test_l4_constant_vector():
    H = dct_basis(4).matrix
    assert np.allclose(H @ np.ones(4), [2, 0, 0, 0], atol=1e-12, rtol=0)


def test_l8_max_entry():
    assert abs(np.max(np.abs(dct_basis(8).matrix)) - 1 / np.sqrt(8)) <= 1e-12


@pytest.mark.parametrize("L", [1, 2, 4, 8, 16])
def test_default_passes_checks(L):
    rep = check_h_assumption(dct_basis(L))
    assert rep.e1_ok and rep.entry_bound_ok and rep.binary_sup_ok and rep.binary_exhaustive


def test_identity_fails_e1():
    rep = check_h_assumption(np.eye(4))
    assert not rep.e1_ok


def test_haar_fails_entry_bound():
    rep = check_h_assumption(haar_basis(4))
    assert not rep.entry_bound_ok
    assert abs(rep.max_entry - 1 / np.sqrt(2)) < 1e-15


def test_cosine_entries_exceed_bound_for_l3():
    # the plain DCT-II is the fallback for L not a power of two
    rep = check_h_assumption(cosine_basis(3))
    assert rep.e1_ok and not rep.entry_bound_ok


def test_non_orthogonal_rejected():
    with pytest.raises(InvalidBasisError):
        TemporalBasis(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(InvalidBasisError):
        check_h_assumption(np.array([[2.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidBasisError):
        walsh_basis(6)
    with pytest.raises(InvalidBasisError):
        get_basis("nope", 4)


@pytest.mark.parametrize("make", [dct_basis, walsh_basis, haar_basis, cosine_basis])
def test_orthogonality(make):
    for L in (1, 2, 4, 8, 16):
        H = make(L).matrix
        assert np.max(np.abs(H @ H.T - np.eye(L))) <= 1e-10


def test_constant_rows_give_first_column(rng):
    c = rng.random(3)
    Q = np.repeat(c[:, None], 8, axis=1)
    D = to_coefficients(Q, dct_basis(8))
    assert np.allclose(D[:, 0], c * np.sqrt(8), atol=1e-12)
    assert np.all(np.abs(D[:, 1:]) < 1e-12)
    assert support_of(D, 1e-12).tolist() == [0, 1, 2]


def test_m1_l1():
    Q = np.array([[0.3]])
    assert to_coefficients(Q, dct_basis(1)).tolist() == [[0.3]]


def test_kron_vec_identity(rng):
    for L in (2, 3, 8):
        H = get_basis("dct", L)
        Q = rng.random((3, L))
        lhs = vec(to_coefficients(Q, H))
        rhs = coefficient_operator(H, 3) @ vec(Q)
        assert np.linalg.norm(lhs - rhs) <= 1e-10
        assert np.max(np.abs(from_coefficients(to_coefficients(Q, H), H) - Q)) <= 1e-10
        assert abs(np.linalg.norm(Q) - np.linalg.norm(to_coefficients(Q, H))) <= 1e-10


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        to_coefficients(np.zeros((2, 3)), dct_basis(4))


def test_truncate():
    D = np.arange(6.0).reshape(2, 3)
    T = truncate(D, [0, 3])  # (0,0) and (1,1)
    assert T.tolist() == [[0, 0, 0], [0, 4, 0]]
