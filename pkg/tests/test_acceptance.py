"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a single ``[PASS]``/``[FAIL]`` line.  Running this file as a
script (``python3 tests/test_acceptance.py``) prints the same ten lines.
"""
from __future__ import annotations

import random
import sys
import time
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
import pytest
import sympy

from coiso.exact import QMatrix
from coiso.forms import DiffForm, VecField, d, homotopy_potential, interior, lie_derivative, substitute, wedge
from coiso.gnh import LinQuadSystem, run_gnh, to_linear_quadratic
from coiso.lagrange import Lagrangian, cartan_data, euler_lagrange_system, synthesize_lagrangian, verify_theorem1
from coiso.lift import base_projection, invariance_check, lift, lift_parts, recover_extended_hamiltonian
from coiso.linear import default_matrix_connection, lift_lq, recover_hamiltonian_lq, thicken_lq, validate_lq
from coiso.models import corpus_specs, lattice_maxwell, nonflat_example, random_system, rotor_example, weak_flat_example
from coiso.numsim import compare_projected_flow, conservation_report, integrate_midpoint
from coiso.pipeline import run_pipeline
from coiso.poly import Poly
from coiso.presys import default_connection, kernel_basis
from coiso.thicken import nondegeneracy_check, thicken

CORPUS = corpus_specs(100, seed=0)


def line(n: int, ok: bool, what: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {what}"


@pytest.fixture
def say(capsys):
    def emit(n, ok, what):
        with capsys.disabled():
            print("\n" + line(n, ok, what), end="  ")
    return emit


@lru_cache(maxsize=None)
def corpus_thickenings():
    out = []
    for spec in CORPUS:
        sys_ = random_system(*spec)
        t = thicken(sys_, default_connection(sys_.omega, kernel_basis(sys_.omega)))
        out.append((spec, sys_, t))
    return tuple(out)


@lru_cache(maxsize=None)
def corpus_lifted():
    out = []
    for spec, sys_, t in corpus_thickenings():
        lt = lift(t)
        out.append((spec, sys_, lt.with_dynamics(H_tilde=recover_extended_hamiltonian(lt))))
    return tuple(out)


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    bad = []
    shapes = set()
    for spec in CORPUS:
        sys_ = random_system(*spec)
        shapes.add(spec[:2])
        t = lift(thicken(sys_, default_connection(sys_.omega, kernel_basis(sys_.omega))))
        if not lie_derivative(t.gamma_tilde, t.omega_tilde).is_zero():
            bad.append(spec)
    dt = time.perf_counter() - t0
    sizes_ok = all(n <= 8 and 0 <= k <= 3 for n, k in shapes)
    ok = not bad and dt <= 60 and sizes_ok and len(CORPUS) >= 100
    return ok, f"L_gamma_tilde omega_tilde = 0 on {len(CORPUS)} systems ({len(shapes)} shapes), {dt:.2f} s"


def criterion_2():
    sys_, P = nonflat_example()
    rep = invariance_check(lift(thicken(sys_, P)))
    localized = (not rep["L_gamma_tilde(omega_tilde)"].passed
                 and rep["L_gamma_tilde(pullback omega)"].status == "pass"
                 and rep["L_gamma_tilde_V(d theta_P)"].status == "pass"
                 and rep["L_gamma_tilde_H(d theta_P)"].residual == rep["L_gamma_tilde(omega_tilde)"].residual != "")
    weak, Pw = weak_flat_example()
    wt = lift(thicken(weak, Pw))
    weak_zero = lie_derivative(wt.gamma_tilde, wt.omega_tilde).is_zero()
    ok = localized and weak_zero
    return ok, (f"nonflat residual {rep['L_gamma_tilde(omega_tilde)'].residual} sits in the horizontal term; "
                f"weak variant exact zero: {weak_zero}")


def criterion_3():
    failures = []
    for spec, sys_, t in corpus_thickenings():
        closed = d(t.omega_tilde).is_zero()
        pulls_back = substitute(t.omega_tilde, t.zero_section(), sys_.chart) == sys_.omega
        routes = t.omega_tilde == sys_.omega.rechart(t.extended_chart) + d(t.theta_P)
        lq = to_linear_quadratic(sys_)
        tl = thicken_lq(lq, default_matrix_connection(lq))
        matrix = tl.Omega_tilde == QMatrix.from_dense(t.omega_tilde.constant_matrix())
        nondeg = all(c.status == "pass" for c in nondegeneracy_check(t).checks if c.name != "degeneracy_locus")
        if not (closed and pulls_back and routes and matrix and nondeg):
            failures.append(spec)
    return not failures, f"closed, restricts to omega, routes agree, nondegenerate: {100 - len(failures)}/100"


def criterion_4():
    failures = []
    explicit = 0
    for spec, _, t in corpus_lifted():
        lag = synthesize_lagrangian(t)
        rep = verify_theorem1(t, lag, cartan_data(lag))
        names = {c.name: c.status for c in rep.checks}
        need = ("omega_L_along_gamma_section", "i_gamma_omega_equals_dE", "euler_lagrange_residual_on_gamma_tilde",
                "explicit_euler_lagrange_field", "gnh_final_manifold")
        # skips count as failures here: every bullet must actually run
        if not all(names.get(n) == "pass" for n in need) or not all(c.status == "pass" for c in rep.checks):
            failures.append(spec)
        explicit += names.get("explicit_euler_lagrange_field") == "pass"
    return not failures, (f"section pullback, energy, EL residual, explicit EL field and one-step GNH "
                          f"hold on {100 - len(failures)}/100 ({explicit} explicit fields)")


def criterion_5():
    failures = []
    for spec, sys_, t in corpus_lifted():
        LV, LH = lift_parts(t)
        ok = lie_derivative(LV, t.theta_P).is_zero()
        ok &= all(interior(LH, DiffForm.coordinate(t.extended_chart, m)).is_zero() for m in t.mu_names)
        ok &= base_projection(t.gamma_tilde, t) == sys_.gamma
        if not ok:
            failures.append(spec)
    return not failures, f"vertical and horizontal lift equations, base projection: {100 - len(failures)}/100"


def _random_poly(rng, chart, max_deg=2, max_terms=3):
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        exp = [0] * len(chart)
        for _ in range(rng.randint(0, max_deg)):
            exp[rng.randrange(len(chart))] += 1
        terms[tuple(exp)] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return Poly(chart, terms)


def _random_closed_forms(count, seed=11):
    rng = random.Random(seed)
    names = ["x", "y", "z", "u", "v", "w"]
    out = []
    while len(out) < count:
        n = rng.randint(1, 6)
        k = rng.randint(1, min(3, n))
        chart = tuple(names[:n])
        idxs = list(combinations(range(n), k - 1))
        b = DiffForm(chart, k - 1, {I: _random_poly(rng, chart) for I in rng.sample(idxs, min(len(idxs), 3))})
        a = d(b)
        if not a.is_zero():
            out.append(a)
    return out


def criterion_6():
    forms = _random_closed_forms(100)
    degrees = {a.degree for a in forms}
    random_ok = all(d(homotopy_potential(a)) == a for a in forms)
    corpus_ok = all(d(homotopy_potential(t.omega_tilde)) == t.omega_tilde
                    for _, _, t in corpus_thickenings() if not t.omega_tilde.is_zero())
    return random_ok and corpus_ok and degrees == {1, 2, 3}, (
        f"d h a = a on 100 random exact forms (degrees {sorted(degrees)}): {random_ok}; "
        f"on every corpus omega_tilde: {corpus_ok}")


def criterion_7():
    rep = run_pipeline(rotor_example())
    X = ("x", "y", "z", "mu_1")
    x, y, z, mu = Poly.variables(X)
    dx, dy, dz, dmu = (DiffForm.coordinate(X, c) for c in X)
    omega = wedge(dx, dy) + wedge(dmu, dz)
    gamma = VecField(X, [y, -x, z, -mu])
    H = (x * x + y * y) * Fraction(1, 2) - mu * z
    a = rep.artifacts
    ok = (rep.passed and a["omega_tilde"] == str(omega) and a["gamma_tilde"] == str(gamma)
          and a["H_tilde"] == str(H) and a["euler_lagrange_field"] == str(gamma))
    # the same values as objects, away from string formatting
    sys_ = rotor_example()
    t = lift(thicken(sys_, default_connection(sys_.omega, kernel_basis(sys_.omega))))
    t = t.with_dynamics(H_tilde=recover_extended_hamiltonian(t))
    el = euler_lagrange_system(synthesize_lagrangian(t))
    ok &= t.omega_tilde == omega and t.gamma_tilde == gamma and t.H_tilde == H and el.explicit == gamma
    return ok, f"omega_tilde = {omega}, gamma_tilde = {gamma}, H_tilde = {H}, EL field = gamma_tilde"


def criterion_8():
    t0 = time.perf_counter()
    lm = lattice_maxwell(2)
    lq = lm.system
    conn = default_matrix_connection(lq)
    tl = thicken_lq(lq, conn)
    dims_ok = (lq.n, conn.rank, tl.dim) == (49, 15, 64)
    valid = validate_lq(lq).passed and lm.gauss_exact()
    thick = recover_hamiltonian_lq(lift_lq(tl)).as_lq()
    rng = np.random.default_rng(0)
    x0 = rng.uniform(-1, 1, lq.n)
    mu0 = rng.uniform(-1, 1, thick.n - lq.n)
    base_tr = integrate_midpoint(lq, x0, 0.01, 10_000)
    thick_tr = integrate_midpoint(thick, np.concatenate([x0, mu0]), 0.01, 10_000)
    drift = conservation_report(thick_tr, {"H_tilde": thick}, 1e-8)["drift[H_tilde]"]
    flow = compare_projected_flow(base_tr, thick_tr, 1e-8)
    gauss = max(lm.gauss_residual(base_tr.states), lm.gauss_residual(thick_tr.states))
    t2 = time.perf_counter() - t0
    t1 = time.perf_counter()
    rep3 = run_pipeline(lattice_maxwell(3).system)
    t3 = time.perf_counter() - t1
    ok = (dims_ok and valid and drift.status == "pass" and flow.status == "pass" and gauss <= 1e-12
          and t2 <= 120 and rep3.passed and t3 <= 600)
    return ok, (f"N=2 dims {lq.n}/{conn.rank}/{tl.dim}, H_tilde drift {drift.detail['max_drift']:.1e}, "
                f"Gauss {gauss:.1e}, flow {flow.detail['max_discrepancy']:.1e}, {t2:.1f} s; "
                f"N=3 matrix pipeline {'passes' if rep3.passed else 'fails'} in {t3:.1f} s")


def _degenerate_systems(count, seed=5):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.randint(2, 7)
        R = QMatrix.from_dense([[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)])
        T = QMatrix.from_dense([[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)])
        T.rows[rng.randrange(n)] = {}
        Om = T.T @ (R - R.T) @ T
        S = QMatrix.from_dense([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        out.append(LinQuadSystem(Om, S + S.T, [rng.randint(-2, 2) for _ in range(n)]))
    return out


def criterion_9():
    rng = random.Random(9)
    inv_ok = True
    for _ in range(20):
        k = rng.randint(1, 3)
        n = 2 * k
        U = [[Fraction(int(i == j) if j <= i else rng.randint(-3, 3)) for j in range(n)] for i in range(n)]
        J = [[1 if j == i + k else -1 if i == j + k else 0 for j in range(n)] for i in range(n)]
        Om = QMatrix.from_dense(U).T @ QMatrix.from_dense(J) @ QMatrix.from_dense(U)
        S = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(n)]
        lq = LinQuadSystem(Om, QMatrix.from_dense(S) + QMatrix.from_dense(S).T, [rng.randint(-3, 3) for _ in range(n)])
        chain = run_gnh(lq)
        # omega(v, .) = dH  means  Omega^T v = Q x + c
        inv = sympy.Matrix(Om.to_dense()).T.inv()
        F = inv * sympy.Matrix(lq.Q.to_dense())
        f = inv * sympy.Matrix(lq.c)
        inv_ok &= chain.dims == [n] and chain.iterations == 1
        inv_ok &= chain.dynamics_matrix.to_dense() == [[Fraction(str(v)) for v in F.row(i)] for i in range(n)]
        inv_ok &= chain.dynamics_offset == [Fraction(str(v)) for v in f]
    zero_ok = all(run_gnh(LinQuadSystem(QMatrix.zeros(n, n), QMatrix.identity(n), [0] * n)).final.dim == 0
                  for n in (1, 2, 5))
    chains = [run_gnh(lq) for lq in _degenerate_systems(50)]
    mono = all(all(a >= b for a, b in zip(c.dims, c.dims[1:])) for c in chains)
    longest = max(len(c.dims) for c in chains)
    return inv_ok and zero_ok and mono, (f"invertible: one step, (Omega^T)^-1 (Qx + c): {inv_ok}; Omega = 0, Q = I "
                                         f"gives {{0}}: {zero_ok}; 50 degenerate chains non-increasing: {mono} "
                                         f"(longest {longest} manifolds)")


def criterion_10():
    rng = random.Random(10)
    lifted = corpus_lifted()
    pool = [item for item in lifted if item[0][0] >= 2]
    unchanged = 0
    for i in range(20):
        _, _, t = pool[rng.randrange(len(pool))]
        lag = synthesize_lagrangian(t)
        f = _random_poly(rng, lag.base_chart, max_deg=3, max_terms=4)
        T = lag.tangent_chart
        extra = Poly.zero(T)
        for a in range(lag.n):
            extra = extra + f.diff(a).rechart(T) * Poly.var(T, lag.n + a)
        e0 = euler_lagrange_system(lag)
        e1 = euler_lagrange_system(Lagrangian(lag.base_chart, lag.L + extra))
        unchanged += e0.W == e1.W and e0.g == e1.g
    return unchanged == 20, f"EL implicit system unchanged by df/dq . v for {unchanged}/20 random f"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8,
            criterion_9, criterion_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n, say):
    ok, what = CRITERIA[n - 1]()
    say(n, ok, what)
    assert ok, what


if __name__ == "__main__":
    results = []
    for i, fn in enumerate(CRITERIA, 1):
        ok, what = fn()
        results.append(ok)
        print(line(i, ok, what), flush=True)
    sys.exit(0 if all(results) else 1)
