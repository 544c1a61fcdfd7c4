import numpy as np
import pytest

from coiso.exact import QMatrix
from coiso.forms import VecField
from coiso.linear import default_matrix_connection, thicken_lq, validate_lq
from coiso.models import (Lattice, corpus, corpus_specs, lattice_identities, lattice_maxwell, nonflat_example,
                          random_linear_system, random_system, rotor_example, weak_flat_example)
from coiso.presys import flatness_check, kernel_basis, validate


def test_rotor():
    sys = rotor_example()
    assert validate(sys).passed
    assert kernel_basis(sys.omega) == [VecField.coordinate(sys.chart, "z")]


def test_nonflat_and_weak_variants():
    sys, P = nonflat_example()
    assert validate(sys).passed
    assert flatness_check(P, sys.chart)["P[H_x, H_y]"].residual == "-d_z"
    assert not flatness_check(P, sys.chart, sys.gamma).passed
    weak, Pw = weak_flat_example()
    assert validate(weak).passed and Pw == P
    assert Pw.horizontal(weak.gamma).is_zero()
    assert flatness_check(Pw, weak.chart, weak.gamma).passed


def test_random_system_examples():
    assert validate(random_system(4, 2, 7)).passed
    sym = random_system(4, 0, 123)
    assert kernel_basis(sym.omega) == []
    zero = random_system(3, 3, 5)
    assert zero.omega.is_zero()
    with pytest.raises(ValueError):
        random_system(4, 1, 0)


def test_corpus_is_deterministic_and_covers_shapes():
    specs = corpus_specs(100, seed=0)
    assert specs == corpus_specs(100, seed=0)
    shapes = {(n, k) for n, k, _ in specs}
    assert len(shapes) == 15 and max(n for n, _ in shapes) == 8
    assert all(validate(s).passed for s in corpus(30, seed=2))
    assert random_linear_system(6, 2, 9) == random_linear_system(6, 2, 9)


@pytest.mark.parametrize("N", [2, 3])
def test_lattice_identities(N):
    ids = lattice_identities(lattice_maxwell(N))
    assert ids["curl_grad_zero"] and ids["div_curl_zero"] and ids["gauss_exact"]
    assert ids["rank_grad"] == ids["rank_div"] == N ** 3 - 1


def ambient_blocks(lm):
    """Ambient (A0, A, E) operators built directly from the lattice, independent of the parametrization."""
    S = lm.N ** 3
    n = 7 * S
    Om = QMatrix(n, n)
    Q = QMatrix(n, n)
    Dyn = QMatrix(n, n)
    d0, d1 = lm.grad, lm.curl
    KK = d1.T @ d1
    for e in range(3 * S):
        Om.rows[S + e][4 * S + e] = 1
        Om.rows[4 * S + e][S + e] = -1
        Q.rows[4 * S + e][4 * S + e] = 1
        Dyn.rows[S + e] = {**{k: v for k, v in d0.rows[e].items()}, 4 * S + e: 1}
        Dyn.rows[4 * S + e] = {S + k: -v for k, v in KK.rows[e].items()}
        for k, v in KK.rows[e].items():
            Q.rows[S + e][S + k] = v
    return [QMatrix.from_dense(M.to_dense()) for M in (Om, Q, Dyn)]


def test_maxwell_matches_ambient_equations():
    lm = lattice_maxwell(2)
    lq, amb = lm.system, lm.ambient
    Om, Q, Dyn = ambient_blocks(lm)
    assert amb.T @ Om @ amb == lq.Omega
    assert amb.T @ Q @ amb == lq.Q
    assert amb @ lq.A == Dyn @ amb
    assert amb.rank() == lq.n  # the parametrization is injective


def test_maxwell_dimensions_and_validate():
    lm = lattice_maxwell(2)
    lq = lm.system
    assert lq.n == 49
    conn = default_matrix_connection(lq)
    assert conn.rank == 15
    assert thicken_lq(lq, conn).dim == 64
    assert validate_lq(lq, conn).passed
    assert lm.metadata["convention"]["H"].startswith("1/2")


def test_gauge_shift_leaves_energy_unchanged():
    lm = lattice_maxwell(2)
    lq = lm.system
    lam = lm.metadata["blocks"]["lam"]
    for j in range(lam[0], lam[0] + lam[1]):
        assert not lq.Q.column(j) or not any(lq.Q.column(j))


def test_gauss_residual_numeric():
    lm = lattice_maxwell(2)
    rng = np.random.default_rng(0)
    assert lm.gauss_residual(rng.uniform(-1, 1, (5, lm.dim))) < 1e-12


def test_lattice_rejects_small_grids():
    with pytest.raises(ValueError):
        Lattice(1)
