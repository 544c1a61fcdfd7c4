from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from coiso.exact import QMatrix
from coiso.gnh import LinQuadSystem, NotLinearQuadratic, run_gnh, to_linear_quadratic, to_symbolic
from coiso.lagrange import cartan_data, synthesize_lagrangian
from coiso.lift import lift, recover_extended_hamiltonian
from coiso.models import rotor_example
from coiso.poly import Poly
from coiso.presys import PreSympSystem, default_connection, kernel_basis
from coiso.forms import DiffForm
from coiso.thicken import thicken

small = st.integers(-3, 3)


@st.composite
def square(draw, n):
    return QMatrix.from_dense([[draw(small) for _ in range(n)] for _ in range(n)])


@st.composite
def lq_systems(draw, min_n=1, max_n=6, degenerate=True):
    n = draw(st.integers(min_n, max_n))
    R = draw(square(n))
    Om = R - R.T
    if degenerate:
        # push through a rank-deficient map so the form really is degenerate
        T = draw(square(n))
        drop = draw(st.integers(0, n - 1))
        T.rows[drop] = {}
        Om = T.T @ Om @ T
    S = draw(square(n))
    Q = S + S.T
    c = [draw(small) for _ in range(n)]
    return LinQuadSystem(Om, Q, c)


def sym(M):
    return sympy.Matrix(M.to_dense())


@given(st.integers(1, 3), st.data())
def test_invertible_omega_stabilises_at_once(k, data):
    n = 2 * k
    J = QMatrix.zeros(n, n)
    for i in range(k):
        J.rows[i][k + i] = Fraction(1)
        J.rows[k + i][i] = Fraction(-1)
    U = QMatrix.identity(n)  # unit upper triangular, so J stays nondegenerate
    for i in range(n):
        for j in range(i + 1, n):
            U.rows[i][j] = Fraction(data.draw(small))
    U = QMatrix.from_dense(U.to_dense())
    Om = U.T @ J @ U
    S = data.draw(square(n))
    lq = LinQuadSystem(Om, S + S.T, [data.draw(small) for _ in range(n)])
    chain = run_gnh(lq)
    assert chain.dims == [n] and chain.iterations == 1 and chain.freedom == []
    inv = sym(Om).T.inv()
    F = inv * sym(lq.Q)
    f = inv * sympy.Matrix(lq.c)
    assert chain.dynamics_matrix.to_dense() == [[Fraction(str(v)) for v in F.row(i)] for i in range(n)]
    assert chain.dynamics_offset == [Fraction(str(v)) for v in f]


def test_zero_form_identity_hamiltonian_collapses_to_origin():
    for n in (1, 3, 5):
        lq = LinQuadSystem(QMatrix.zeros(n, n), QMatrix.identity(n), [0] * n)
        chain = run_gnh(lq)
        assert chain.final.dim == 0 and chain.final.contains([0] * n)
        assert not chain.empty


def test_inconsistent_constraints_give_empty_manifold():
    lq = LinQuadSystem(QMatrix.zeros(2, 2), QMatrix.zeros(2, 2), [1, 0])
    assert run_gnh(lq).empty


def first_constraint_dim(lq):
    """dim {x : z.(Qx + c) = 0 for all z with Omega z = 0}, or None if empty."""
    Z = sym(lq.Omega).nullspace()
    if not Z:
        return lq.n
    Zm = sympy.Matrix.hstack(*Z).T
    G, h = Zm * sym(lq.Q), -Zm * sympy.Matrix(lq.c)
    if G.rank() != G.row_join(h).rank():
        return None
    return lq.n - G.rank()


@given(lq_systems())
def test_chain_properties(lq):
    chain = run_gnh(lq)
    dims = chain.dims
    assert all(a > b for a, b in zip(dims, dims[1:]))
    if len(dims) > 1 or chain.empty:
        expect = first_constraint_dim(lq)
        assert (expect is None) if (chain.empty and len(dims) == 1) else dims[1] == expect
    if chain.empty:
        return
    M = chain.final
    F, f = chain.dynamics_matrix, chain.dynamics_offset
    # the final dynamics solves Omega^T v = Q x + c and stays tangent to M
    pts = [M.offset] + [[o + v for o, v in zip(M.offset, M.basis.row(i))] for i in range(M.dim)]
    for x in pts:
        v = [a + b for a, b in zip(F @ x, f)]
        assert lq.Omega.T @ v == [a + b for a, b in zip(lq.Q @ x, lq.c)]
        assert M.contains([a + b for a, b in zip(M.offset, v)])
    for w in chain.freedom:
        assert not any(lq.Omega.T @ w)


@given(lq_systems(), st.data())
def test_congruence_invariance(lq, data):
    n = lq.n
    T = QMatrix.identity(n)
    for _ in range(3):  # product of elementary shears is unimodular
        i, j = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
        if i != j:
            E = QMatrix.identity(n)
            E.rows[i][j] = Fraction(data.draw(small))
            T = T @ E
    moved = LinQuadSystem(T.T @ lq.Omega @ T, T.T @ lq.Q @ T, T.T @ lq.c)
    a, b = run_gnh(lq), run_gnh(moved)
    assert a.dims == b.dims and a.empty == b.empty


def test_cartan_data_of_rotor():
    sys = rotor_example()
    t = lift(thicken(sys, default_connection(sys.omega, kernel_basis(sys.omega))))
    t = t.with_dynamics(H_tilde=recover_extended_hamiltonian(t))
    lq = to_linear_quadratic(cartan_data(synthesize_lagrangian(t)))
    chain = run_gnh(lq)
    assert chain.dims == [8] and chain.iterations == 1
    target = to_linear_quadratic(t)
    assert chain.dynamics_matrix.submatrix(range(4), range(4)) == target.A
    assert len(chain.freedom) == 4 and all(not any(w[:4]) for w in chain.freedom)


def test_rotor_thickening_matrix():
    sys = rotor_example()
    t = thicken(sys, default_connection(sys.omega, kernel_basis(sys.omega)))
    lq = to_linear_quadratic(t)
    assert lq.Omega.to_dense() == [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]]
    assert lq.labels == ("x", "y", "z", "mu_1")


def test_conversion_limits():
    X = ("x",)
    x = Poly.var(X, "x")
    half = PreSympSystem(X, DiffForm.zero(X, 2), x * x * Fraction(1, 2))
    lq = to_linear_quadratic(half)
    assert lq.Q.to_dense() == [[1]] and lq.c == [0]
    with pytest.raises(NotLinearQuadratic):
        to_linear_quadratic(PreSympSystem(X, DiffForm.zero(X, 2), x * x * x))


@given(lq_systems())
def test_symbolic_round_trip(lq):
    chart, omega, H, _ = to_symbolic(lq)
    back = to_linear_quadratic(PreSympSystem(chart, omega, H))
    assert back == lq
