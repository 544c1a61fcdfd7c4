"""Lifting base dynamics to the thickening and recovering its Hamiltonian."""
from __future__ import annotations

from .forms import DiffForm, VecField, apply_form, d, homotopy_potential, interior, lie_derivative, substitute
from .poly import Poly
from .presys import flatness_check, split
from .report import Check, Report
from .thicken import ThickenedSystem


class LiftError(ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message}: {residual}")
        self.residual = residual


def lift_vertical(gamma_V: VecField, t: ThickenedSystem) -> VecField:
    """Vertical lift: projects onto gamma_V and leaves theta_P invariant.

    Fibre components are c_i = -mu_k (L_{gamma_V} P_k)(V^i), read off in the
    kernel frame; the invariance of theta_P is re-checked afterwards because
    the frame equations only determine the lift when they are consistent.
    """
    P = t.connection
    if P.project(gamma_V) != gamma_V:
        raise LiftError("field is not vertical", gamma_V - P.project(gamma_V))
    ext = t.extended_chart
    comps = list(gamma_V.rechart(ext).comps)
    n = len(t.base.chart)
    LPs = [lie_derivative(gamma_V, Pk) for Pk in P.forms]
    for i, Vi in enumerate(P.vertical_basis):
        c = Poly.zero(ext)
        for k, LPk in enumerate(LPs):
            coef = apply_form(LPk, Vi) if not LPk.is_zero() else None
            if coef:
                c = c - coef.rechart(ext) * Poly.var(ext, t.mu_names[k])
        comps[n + i] = c
    lifted = VecField(ext, comps)
    residual = lie_derivative(lifted, t.theta_P)
    if not residual.is_zero():
        raise LiftError("no vertical lift preserves theta_P for this field (L theta_P != 0)", residual)
    return lifted


def lift_horizontal(gamma_H: VecField, t: ThickenedSystem) -> VecField:
    P = t.connection
    if not P.project(gamma_H).is_zero():
        raise LiftError("field is not horizontal", P.project(gamma_H))
    lifted = gamma_H.rechart(t.extended_chart)
    for m in t.mu_names:
        r = interior(lifted, DiffForm.coordinate(t.extended_chart, m))
        if not r.is_zero():
            raise LiftError(f"horizontal lift has a d{m} component", r)
    return lifted


def lift_parts(t: ThickenedSystem, gamma: VecField | None = None):
    gamma = gamma if gamma is not None else t.base.gamma
    if gamma is None:
        raise ValueError("system has no dynamics to lift")
    GV, GH = split(gamma, t.connection)
    return lift_vertical(GV, t), lift_horizontal(GH, t)


def lift(t: ThickenedSystem, gamma: VecField | None = None) -> ThickenedSystem:
    """Fill in gamma_tilde = vertical lift of P(Gamma) + horizontal lift of the rest."""
    gamma = gamma if gamma is not None else t.base.gamma
    LV, LH = lift_parts(t, gamma)
    gt = LV + LH
    n = len(t.base.chart)
    if gt.comps[:n] != tuple(c.rechart(t.extended_chart) for c in gamma.comps):
        raise LiftError("lift does not project onto the base dynamics")
    return t.with_dynamics(gamma_tilde=gt)


def base_projection(field: VecField, t: ThickenedSystem) -> VecField:
    """Drop fibre components and restrict to the zero section."""
    n = len(t.base.chart)
    zero = {m: Poly.zero(t.base.chart) for m in t.mu_names}
    images = [Poly.var(t.base.chart, c) for c in t.base.chart] + [zero[m] for m in t.mu_names]
    return VecField(t.base.chart, [c.compose(images) for c in field.comps[:n]])


def invariance_check(t: ThickenedSystem) -> Report:
    """L_{gamma_tilde} omega_tilde, split the way the flatness argument splits it."""
    if t.gamma_tilde is None:
        raise ValueError("lift the dynamics first")
    rep = Report("invariance")
    LV, LH = lift_parts(t)
    omega_up = t.base.omega.rechart(t.extended_chart)
    dtheta = d(t.theta_P)
    total = lie_derivative(t.gamma_tilde, t.omega_tilde)
    base_term = lie_derivative(t.gamma_tilde, omega_up)
    vert_term = lie_derivative(LV, dtheta)
    horiz_term = lie_derivative(LH, dtheta)
    rep.add(Check.exact_zero("L_gamma_tilde(omega_tilde)", total))
    rep.add(Check.exact_zero("L_gamma_tilde(pullback omega)", base_term))
    rep.add(Check.exact_zero("L_gamma_tilde_V(d theta_P)", vert_term))
    rep.add(Check.exact_zero("L_gamma_tilde_H(d theta_P)", horiz_term))
    rep.add(Check.exact_zero("decomposition_sums", total - base_term - vert_term - horiz_term))
    if t.connection.rank and t.base.gamma is not None:
        weak = flatness_check(t.connection, t.base.chart, gamma=t.base.gamma)
        bad = [f"{c.name} = {c.residual}" for c in weak.checks if c.status == "fail"]
        rep.add(Check("horizontal_curvature_along_gamma", "skip", "; ".join(bad),
                      {"weak_flatness": weak.passed}))
    return rep


def recover_extended_hamiltonian(t: ThickenedSystem) -> Poly:
    """H_tilde with dH_tilde = i_{gamma_tilde} omega_tilde, normalised by H_tilde(0) = 0."""
    if t.gamma_tilde is None:
        raise ValueError("lift the dynamics first")
    alpha = interior(t.gamma_tilde, t.omega_tilde)
    dalpha = d(alpha)
    if not dalpha.is_zero():
        raise LiftError("i_{gamma_tilde} omega_tilde is not closed; invariance failed upstream", dalpha)
    H = homotopy_potential(alpha, check=False).as_function()
    assert d(DiffForm.function(H)) == alpha
    return H


def hamiltonian_restriction_check(t: ThickenedSystem) -> Check:
    """H_tilde on the zero section should be H up to a constant."""
    if t.H_tilde is None:
        raise ValueError("recover H_tilde first")
    restricted = substitute(DiffForm.function(t.H_tilde), t.zero_section(), t.base.chart).as_function()
    diff = restricted - t.base.H
    ok = diff.is_constant()
    return Check("H_tilde_restricts_to_H", "pass" if ok else "fail", "" if ok else str(diff),
                 {"offset": str(diff.constant_term()) if ok else None})
