import pytest
from fractions import Fraction
from hypothesis import given
from hypothesis import strategies as st

from coiso.forms import DiffForm, VecField, d, interior, lie_derivative
from coiso.lift import (LiftError, base_projection, hamiltonian_restriction_check, invariance_check, lift, lift_horizontal,
                        lift_parts, lift_vertical, recover_extended_hamiltonian)
from coiso.models import corpus_specs, nonflat_example, random_system, rotor_example, weak_flat_example
from coiso.poly import Poly
from coiso.presys import Connection, PreSympSystem, default_connection, kernel_basis
from coiso.thicken import thicken

X3 = ("x", "y", "z")
X4 = ("x", "y", "z", "mu_1")
x, y, z, mu = Poly.variables(X4)


def rotor_t():
    sys = rotor_example()
    return thicken(sys, default_connection(sys.omega, kernel_basis(sys.omega)))


def test_vertical_lift_examples():
    t = rotor_t()
    zb = Poly.var(X3, "z")
    LV = lift_vertical(VecField(X3, [0, 0, zb]), t)
    assert LV == VecField(X4, [0, 0, z, -mu])
    assert lie_derivative(LV, DiffForm.coordinate(X4, "z") * mu).is_zero()
    assert lift_vertical(VecField.coordinate(X3, "z"), t) == VecField.coordinate(X4, "z")
    assert lift_vertical(VecField.zero(X3), t).is_zero()
    with pytest.raises(LiftError):
        lift_vertical(VecField.coordinate(X3, "x"), t)


def test_horizontal_lift_examples():
    t = rotor_t()
    xb, yb = Poly.var(X3, "x"), Poly.var(X3, "y")
    assert lift_horizontal(VecField(X3, [yb, -xb, 0]), t) == VecField(X4, [y, -x, 0, 0])
    assert lift_horizontal(VecField.zero(X3), t).is_zero()
    sys, P = nonflat_example()
    tn = thicken(sys, P)
    Hx = VecField(X3, [1, 0, yb])
    assert lift_horizontal(Hx, tn) == VecField(X4, [1, 0, y, 0])
    with pytest.raises(LiftError):
        lift_horizontal(VecField.coordinate(X3, "z"), t)


def test_rotor_lift_and_hamiltonian():
    t = lift(rotor_t())
    assert t.gamma_tilde == VecField(X4, [y, -x, z, -mu])
    rep = invariance_check(t)
    assert rep.passed
    H = recover_extended_hamiltonian(t)
    assert H == (x * x + y * y) * Fraction(1, 2) - mu * z
    assert hamiltonian_restriction_check(t.with_dynamics(H_tilde=H)).passed


def test_trivial_lifts():
    t = rotor_t()
    for gamma in (VecField(X3, [1, 2, 0]), VecField.coordinate(X3, "z")):
        assert lift(t, gamma).gamma_tilde == gamma.rechart(X4)
    t0 = lift(t, VecField.zero(X3))
    assert t0.gamma_tilde.is_zero()
    assert recover_extended_hamiltonian(t0).is_zero()


def test_zero_dynamics_invariant_for_any_connection():
    sys, P = nonflat_example()
    t = lift(thicken(sys.with_gamma(VecField.zero(X3)), P))
    assert invariance_check(t).passed


def test_nonflat_negative_control():
    sys, P = nonflat_example()
    t = lift(thicken(sys, P))
    rep = invariance_check(t)
    assert not rep.passed
    assert rep["L_gamma_tilde(pullback omega)"].passed
    assert rep["L_gamma_tilde_V(d theta_P)"].passed
    assert rep["L_gamma_tilde_H(d theta_P)"].residual == "dx^dmu_1"
    assert rep["L_gamma_tilde(omega_tilde)"].residual == "dx^dmu_1"
    assert rep["decomposition_sums"].passed
    with pytest.raises(LiftError):
        recover_extended_hamiltonian(t)


def test_weak_condition_variant():
    sys, P = weak_flat_example()
    t = lift(thicken(sys, P))
    assert invariance_check(t).passed
    H = recover_extended_hamiltonian(t)
    assert hamiltonian_restriction_check(t.with_dynamics(H_tilde=H)).passed


def test_symplectic_base_gives_back_H():
    sys = random_system(4, 0, 9)
    t = lift(thicken(sys, Connection((), ())))
    H = recover_extended_hamiltonian(t)
    assert (H - sys.H).is_constant()


SPECS = corpus_specs(40, seed=17)


@given(st.sampled_from(SPECS))
def test_lift_equations_on_corpus(spec):
    sys = random_system(*spec)
    t = lift(thicken(sys, default_connection(sys.omega, kernel_basis(sys.omega))))
    LV, LH = lift_parts(t)
    assert lie_derivative(LV, t.theta_P).is_zero()
    for m in t.mu_names:
        assert interior(LH, DiffForm.coordinate(t.extended_chart, m)).is_zero()
    assert base_projection(t.gamma_tilde, t) == sys.gamma
    assert invariance_check(t).passed
    H = recover_extended_hamiltonian(t)
    assert d(DiffForm.function(H)) == interior(t.gamma_tilde, t.omega_tilde)
