"""Hypothesis strategies for polynomials, forms and fields on small charts."""
from fractions import Fraction
from itertools import combinations

from hypothesis import strategies as st

from coiso.forms import DiffForm, VecField
from coiso.poly import Poly

CHARTS = [("x",), ("x", "y"), ("x", "y", "z"), ("x", "y", "z", "w"), ("a", "b", "c", "e", "f"),
          ("q1", "q2", "q3", "q4", "q5", "q6")]

coefs = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def charts(max_dim=4, min_dim=1):
    return st.sampled_from([c for c in CHARTS if min_dim <= len(c) <= max_dim])


@st.composite
def polys(draw, chart, max_deg=2, max_terms=4):
    n = len(chart)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exp = tuple(draw(st.lists(st.integers(0, max_deg), min_size=n, max_size=n)))
        if sum(exp) <= max_deg:
            terms[exp] = draw(coefs)
    return Poly(chart, terms)


@st.composite
def forms(draw, chart, degree, max_deg=2):
    n = len(chart)
    idxs = list(combinations(range(n), degree))
    chosen = draw(st.lists(st.sampled_from(idxs), max_size=3, unique=True)) if idxs else []
    return DiffForm(chart, degree, {I: draw(polys(chart, max_deg, 3)) for I in chosen})


@st.composite
def fields(draw, chart, max_deg=2):
    return VecField(chart, [draw(polys(chart, max_deg, 2)) for _ in chart])


@st.composite
def points(draw, chart):
    return [draw(st.fractions(min_value=-3, max_value=3, max_denominator=5)) for _ in chart]


def sympy_of(p: Poly):
    import sympy

    syms = sympy.symbols(list(p.chart))
    return sum((sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[s ** k for s, k in zip(syms, e)])
                for e, c in p.terms.items()), sympy.Integer(0)), syms


def poly_of_sympy(expr, chart):
    import sympy

    syms = sympy.symbols(list(chart))
    P = sympy.Poly(sympy.expand(expr), *syms)
    return Poly(chart, {m: Fraction(int(c.p), int(c.q)) for m, c in P.terms()})
