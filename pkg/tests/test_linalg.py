import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from timobeam.fem import Mesh, TriDiag, assemble_mass
from timobeam.linalg import SingularPivotError, thomas_solve


def test_diagonal_system():
    A = TriDiag(np.zeros(3), np.ones(4), np.zeros(3))
    r = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(thomas_solve(A, r), r)


def test_one_by_one():
    assert thomas_solve(TriDiag([], [1 / 3], []), np.array([2.0]))[0] == pytest.approx(6.0, rel=1e-15)


def test_mass_round_trip():
    M = assemble_mass(Mesh(2.0, 3))
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(thomas_solve(M, M.matvec(x)), x, rtol=0, atol=1e-12)


def test_multiple_right_hand_sides():
    M = assemble_mass(Mesh(1.0, 6))
    X = thomas_solve(M, np.eye(6))
    np.testing.assert_allclose(M.to_dense() @ X, np.eye(6), atol=1e-12)


def test_singular_pivot():
    with pytest.raises(SingularPivotError):
        thomas_solve(TriDiag([1.0], [0.0, 1.0], [1.0]), np.ones(2))
    with pytest.raises(SingularPivotError):
        thomas_solve(TriDiag([1.0], [1.0, 1.0], [1.0]), np.ones(2))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        thomas_solve(TriDiag([], [1.0], []), np.ones(2))


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 40), data=st.data())
def test_diagonally_dominant_residual(n, data):
    el = st.floats(-1.0, 1.0)
    sub = data.draw(hnp.arrays(float, n - 1, elements=el))
    sup = data.draw(hnp.arrays(float, n - 1, elements=el))
    main = 2.5 + data.draw(hnp.arrays(float, n, elements=st.floats(0.0, 5.0)))
    rhs = data.draw(hnp.arrays(float, n, elements=st.floats(-1e3, 1e3)))
    A = TriDiag(sub, main, sup)
    x = thomas_solve(A, rhs)
    assert np.max(np.abs(A.matvec(x) - rhs)) <= 1e-12 * max(np.max(np.abs(rhs)), 1e-300) + 1e-300
