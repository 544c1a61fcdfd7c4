"""Degenerate (velocity-affine) Lagrangians on the tangent bundle of the thickening.

Sign conventions: the Cartan 2-form is omega_L = -d(d_S L) with
d_S L = (dL/dv^a) dq^a, and E_L = Delta(L) - L. With these, the
Euler-Lagrange flow X satisfies i_X omega_L = dE_L. For a target symplectic
form omega_tilde = d theta_tilde this forces L = -theta_tilde_a v^a - H_tilde.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exact import QMatrix
from .forms import DiffForm, VecField, d, homotopy_potential, interior, join_signed, substitute
from .poly import Poly
from .report import Check, Report
from .thicken import ThickenedSystem

VELOCITY_PREFIX = "v_"


class NotAffineError(ValueError):
    pass


def velocity_names(chart) -> tuple:
    names = tuple(VELOCITY_PREFIX + c for c in chart)
    clash = set(names) & set(chart)
    if clash:
        raise ValueError(f"velocity coordinate names collide with the chart: {sorted(clash)}")
    return names


@dataclass(frozen=True)
class Lagrangian:
    base_chart: tuple
    L: Poly
    theta: DiffForm | None = None  # the potential of omega_tilde used in the synthesis

    @property
    def tangent_chart(self) -> tuple:
        return self.L.chart

    @property
    def n(self) -> int:
        return len(self.base_chart)

    def momenta(self) -> list:
        """dL/dv^a as Polys on the tangent chart."""
        return [self.L.diff(self.n + a) for a in range(self.n)]

    def is_velocity_affine(self) -> bool:
        n = self.n
        for p in self.momenta():
            for b in range(n):
                if p.diff(n + b):
                    return False
        return True


@dataclass(frozen=True)
class CartanData:
    chart: tuple
    n: int
    omega_L: DiffForm
    E_L: Poly


@dataclass(frozen=True)
class ELSystem:
    """Implicit first-order system  sum_b W[a][b] qdot^b = g[a]."""

    chart: tuple
    W: tuple
    g: tuple
    explicit: VecField | None = None

    def residual(self, field: VecField) -> list:
        out = []
        for a in range(len(self.chart)):
            r = -self.g[a]
            for b, Wab in enumerate(self.W[a]):
                if Wab:
                    r = r + Wab * field.comps[b]
            out.append(r)
        return out

    def pretty(self) -> str:
        lines = []
        for a, name in enumerate(self.chart):
            lhs = []
            for b, Wab in enumerate(self.W[a]):
                if Wab:
                    s = str(Wab)
                    s = f"({s})" if len(Wab.terms) > 1 else s
                    var = f"{self.chart[b]}'"
                    lhs.append(var if s == "1" else (f"-{var}" if s == "-1" else f"{s}*{var}"))
            lines.append(f"[{name}]  {join_signed(lhs)} = {self.g[a]}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "chart": list(self.chart),
            "W": [[p.to_json() for p in row] for row in self.W],
            "g": [p.to_json() for p in self.g],
            "explicit": None if self.explicit is None else self.explicit.to_json(),
        }


def synthesize_lagrangian(t: ThickenedSystem) -> Lagrangian:
    if t.H_tilde is None:
        raise ValueError("recover H_tilde before synthesizing a Lagrangian")
    q = t.extended_chart
    theta = homotopy_potential(t.omega_tilde)
    if d(theta) != t.omega_tilde:
        raise AssertionError("homotopy potential failed: d theta != omega_tilde")
    tangent = q + velocity_names(q)
    n = len(q)
    L = -t.H_tilde.rechart(tangent)
    for (a,), coef in theta.comps.items():
        L = L - coef.rechart(tangent) * Poly.var(tangent, n + a)
    return Lagrangian(q, L, theta)


def cartan_data(lag: Lagrangian) -> CartanData:
    chart = lag.tangent_chart
    n = lag.n
    momenta = lag.momenta()
    dS = DiffForm(chart, 1, {(a,): p for a, p in enumerate(momenta) if p})
    omega_L = -d(dS)
    E = -lag.L
    for a, p in enumerate(momenta):
        if p:
            E = E + Poly.var(chart, n + a) * p
    return CartanData(chart, n, omega_L, E)


def euler_lagrange_system(lag: Lagrangian) -> ELSystem:
    """Euler-Lagrange equations of a velocity-affine L = lambda_a(q) v^a - V(q).

    They read (d_a lambda_b - d_b lambda_a) qdot^b = d_a V. The explicit field
    is returned when the coefficient matrix is constant and invertible.
    """
    if not lag.is_velocity_affine():
        raise NotAffineError("Lagrangian is not affine in the velocities")
    q = lag.base_chart
    n = lag.n
    zero_v = [Poly.var(q, c) for c in q] + [Poly.zero(q)] * n
    lam = [p.compose(zero_v) for p in lag.momenta()]
    V = -lag.L.compose(zero_v)
    W = tuple(tuple(lam[b].diff(a) - lam[a].diff(b) for b in range(n)) for a in range(n))
    g = tuple(V.diff(a) for a in range(n))
    explicit = None
    if all(p.is_constant() for row in W for p in row):
        Wm = QMatrix.from_dense([[p.constant_term() for p in row] for row in W])
        if n and Wm.rank() == n:
            Winv = Wm.inverse()
            comps = []
            for a in range(n):
                acc = Poly.zero(q)
                for b, w in Winv.rows[a].items():
                    acc = acc + g[b].scale(w)
                comps.append(acc)
            explicit = VecField(q, comps)
    return ELSystem(q, W, g, explicit)


def section(lag: Lagrangian, field: VecField | None) -> dict:
    """Assignment v^a -> field^a(q) (zero section when field is None)."""
    q = lag.base_chart
    vs = lag.tangent_chart[lag.n:]
    if field is None:
        return {v: Poly.zero(q) for v in vs}
    return {v: c for v, c in zip(vs, field.comps)}


def verify_theorem1(t: ThickenedSystem, lag: Lagrangian, cartan: CartanData | None = None,
                    run_gnh_check: bool = True) -> Report:
    cartan = cartan or cartan_data(lag)
    q = lag.base_chart
    rep = Report("theorem1")
    gt = t.gamma_tilde
    on_section = substitute(cartan.omega_L, section(lag, gt), q)
    rep.add(Check.exact_zero("omega_L_along_gamma_section", on_section - t.omega_tilde))
    on_zero = substitute(cartan.omega_L, section(lag, None), q)
    rep.add(Check.exact_zero("omega_L_along_zero_section", on_zero - t.omega_tilde))
    E_sec = substitute(DiffForm.function(cartan.E_L), section(lag, gt), q)
    rep.add(Check.exact_zero("i_gamma_omega_equals_dE", interior(gt, t.omega_tilde) - d(E_sec)))
    try:
        el = euler_lagrange_system(lag)
    except NotAffineError as exc:
        rep.add(Check("euler_lagrange_residual_on_gamma_tilde", "fail", str(exc)))
        return rep
    rep.add(Check.exact_zero("euler_lagrange_residual_on_gamma_tilde", el.residual(gt)))
    if el.explicit is not None:
        rep.add(Check.exact_zero("explicit_euler_lagrange_field", el.explicit - gt))
    if run_gnh_check:
        rep.add(gnh_bullet(t, cartan))
    return rep


def gnh_bullet(t: ThickenedSystem, cartan: CartanData) -> Check:
    """Constraint algorithm on the Cartan data: one-step stabilisation and a
    unique projected base dynamics equal to gamma_tilde."""
    from .gnh import NotLinearQuadratic, projected_dynamics_check, run_gnh, to_linear_quadratic

    try:
        lq = to_linear_quadratic(cartan)
        target = to_linear_quadratic(t)
    except NotLinearQuadratic as exc:
        return Check("gnh_final_manifold", "skip", "", {"reason": str(exc)})
    chain = run_gnh(lq)
    return projected_dynamics_check(chain, target.A, target.b)
