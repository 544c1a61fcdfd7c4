from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from coiso.exact import QMatrix, greedy_complement, kernel_frame

entries = st.fractions(min_value=-4, max_value=4, max_denominator=3)


@st.composite
def matrices(draw, max_m=6, max_n=6, square=False):
    m = draw(st.integers(1, max_m))
    n = m if square else draw(st.integers(1, max_n))
    # sparse-ish so that rank deficiency actually occurs
    cell = st.one_of(st.just(Fraction(0)), st.just(Fraction(0)), entries)
    return [[draw(cell) for _ in range(n)] for _ in range(m)]


def sym(data):
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in data])


def frac(x):
    return Fraction(int(x.p), int(x.q))


@given(matrices())
def test_rref_and_rank_match_sympy(data):
    M = QMatrix.from_dense(data)
    R, piv = M.rref()
    Rs, pivs = sym(data).rref()
    assert tuple(piv) == tuple(pivs)
    assert R.to_dense() == [[frac(v) for v in Rs.row(i)] for i in range(len(piv))]
    assert M.rank() == sym(data).rank()


@given(matrices())
def test_nullspace_is_a_basis_of_the_kernel(data):
    M = QMatrix.from_dense(data)
    ns = M.nullspace()
    assert len(ns) == M.ncols - sym(data).rank()
    for v in ns:
        assert all(x == 0 for x in M @ v)
    if ns:
        assert QMatrix.from_columns(ns, M.ncols).rank() == len(ns)


@given(matrices(square=True))
def test_det_and_inverse(data):
    M = QMatrix.from_dense(data)
    assert M.det() == frac(sym(data).det())
    if M.det():
        assert M @ M.inverse() == QMatrix.identity(M.nrows)
    else:
        with pytest.raises(ZeroDivisionError):
            M.inverse()


@given(matrices(), st.data())
def test_solve_consistent_systems(data, hdata):
    M = QMatrix.from_dense(data)
    x = [hdata.draw(entries) for _ in range(M.ncols)]
    b = M @ x
    sol = M.solve(b)
    assert sol is not None and M @ sol == b


def test_solve_reports_inconsistency():
    M = QMatrix.from_dense([[1, 1], [2, 2]])
    assert M.solve([1, 3]) is None


def test_block_and_transpose():
    A = QMatrix.from_dense([[1, 2], [3, 4]])
    B = QMatrix.block([[A, None], [None, A.T]])
    assert B.shape == (4, 4)
    assert B.to_dense()[3] == [0, 0, 2, 4]


def test_greedy_complement_and_frame():
    # kernel d_z + d_x on (x, y, z): the pivot lands on z
    assert greedy_complement([[1, 0, 1]], 3) == [0, 1]
    labels, V = kernel_frame([[1, 0, 1]], 3)
    assert labels == [2]
    assert V.column(0) == [1, 0, 1]
    with pytest.raises(ValueError):
        greedy_complement([[1, 0], [2, 0]], 2)


def test_floats_refused():
    with pytest.raises(TypeError):
        QMatrix.from_dense([[0.5]])
