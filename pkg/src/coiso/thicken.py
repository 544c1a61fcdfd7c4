"""Symplectic thickening of a pre-symplectic system.

The thickening lives on the base chart extended by one fibre coordinate
``mu_j`` per kernel field. With theta_P = sum_j mu_j P_j the thickened form is
pullback(omega) + d theta_P.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction

from .exact import QMatrix
from .forms import DiffForm, VecField, d, substitute, wedge
from .poly import Poly
from .presys import Connection, PreSympSystem, _pfaffians
from .report import Check, Report

MU_PREFIX = "mu_"


class ChartCollision(ValueError):
    pass


@dataclass(frozen=True)
class ThickenedSystem:
    base: PreSympSystem
    connection: Connection
    extended_chart: tuple
    theta_P: DiffForm
    omega_tilde: DiffForm
    gamma_tilde: VecField | None = None
    H_tilde: Poly | None = None

    @property
    def mu_names(self) -> tuple:
        return self.extended_chart[len(self.base.chart):]

    @property
    def rank(self) -> int:
        return len(self.mu_names)

    def pullback(self, obj):
        """Pull a base form/function/field up to the extended chart."""
        return obj.rechart(self.extended_chart)

    def zero_section(self) -> dict:
        return {m: Poly.zero(self.base.chart) for m in self.mu_names}

    def with_dynamics(self, gamma_tilde=None, H_tilde=None) -> "ThickenedSystem":
        kw = {}
        if gamma_tilde is not None:
            kw["gamma_tilde"] = gamma_tilde
        if H_tilde is not None:
            kw["H_tilde"] = H_tilde
        return replace(self, **kw)


def mu_names(r: int) -> tuple:
    return tuple(f"{MU_PREFIX}{j + 1}" for j in range(r))


def thicken(sys: PreSympSystem, P: Connection) -> ThickenedSystem:
    """Build (extended chart, theta_P, omega_tilde), checking both constructions agree."""
    for name in sys.chart:
        if name.startswith(MU_PREFIX):
            raise ChartCollision(f"coordinate {name!r} uses the reserved prefix {MU_PREFIX!r}")
    if P.chart is not None and P.chart != sys.chart:
        raise ValueError("connection lives on a different chart")
    mus = mu_names(P.rank)
    ext = sys.chart + mus
    omega_up = sys.omega.rechart(ext)
    theta = DiffForm.zero(ext, 1)
    expanded = omega_up
    for j, Pj in enumerate(P.forms):
        mu = Poly.var(ext, mus[j])
        Pj_up = Pj.rechart(ext)
        theta = theta + Pj_up * mu
        expanded = expanded + wedge(DiffForm.coordinate(ext, mus[j]), Pj_up)
        dPj = d(Pj_up)
        if not dPj.is_zero():
            expanded = expanded + dPj * mu
    omega_tilde = omega_up + d(theta)
    if omega_tilde != expanded:
        raise AssertionError(f"the two constructions of omega_tilde disagree by {omega_tilde - expanded}")
    return ThickenedSystem(sys, P, ext, theta, omega_tilde)


def coisotropy_check(t: ThickenedSystem) -> Check:
    """Pullback of omega_tilde along the zero section must give back omega."""
    restricted = substitute(t.omega_tilde, t.zero_section(), t.base.chart)
    return Check.exact_zero("coisotropy", restricted - t.base.omega)


def _factor_text(p: Poly) -> str:
    try:
        import sympy
    except ImportError:  # pragma: no cover
        return str(p)
    syms = sympy.symbols(list(p.chart))
    expr = sum(sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[s ** k for s, k in zip(syms, e)])
               for e, c in p.terms.items())
    return str(sympy.factor(expr))


def nondegeneracy_check(t: ThickenedSystem, samples: int = 3, seed: int = 0) -> Report:
    rep = Report("nondegeneracy")
    om = t.omega_tilde
    n = len(t.extended_chart)
    if n % 2:
        rep.add(Check("even_dimension", "fail", f"extended dimension {n} is odd"))
        return rep
    if om.is_constant():
        det = QMatrix.from_dense(om.constant_matrix()).det()
        rep.add(Check("global", "pass" if det else "fail", "" if det else "determinant is 0",
                      {"determinant": str(det)}))
        return rep
    rng = random.Random(seed)
    if n <= 14:
        pf = _pfaffians(om.matrix(), n)[tuple(range(n))]
        pf0 = pf.compose([Poly.var(t.base.chart, c) if c in t.base.chart else Poly.zero(t.base.chart)
                          for c in t.extended_chart])
        ok0 = pf0.is_constant() and bool(pf0)
        rep.add(Check("zero_section", "pass" if ok0 else "fail",
                      "" if ok0 else f"Pfaffian on the zero section is {pf0}",
                      {"pfaffian": str(pf), "pfaffian_zero_section": str(pf0)}))
        if not pf.is_constant():
            if next(iter(pf.sorted_terms()))[1] < 0:
                pf = -pf
            rep.add(Check("degeneracy_locus", "skip", "",
                          {"determinant": _factor_text(pf * pf), "locus": f"{_factor_text(pf)} = 0"}))
        return rep
    # large non-constant charts: sample near the zero section
    dets = []
    for _ in range(samples):
        pt = [Fraction(rng.randint(-9, 9), 7) for _ in t.base.chart] + \
             [Fraction(rng.randint(-3, 3), 1000) for _ in t.mu_names]
        dets.append(QMatrix.from_dense([[p.evaluate(pt) for p in row] for row in om.matrix()]).det())
    ok = all(dets)
    rep.add(Check("sampled_near_zero_section", "pass" if ok else "fail", "" if ok else "singular sample",
                  {"determinants": [str(x) for x in dets]}))
    return rep
