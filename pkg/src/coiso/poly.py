"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Poly` lives on a *chart*, an ordered tuple of coordinate names.
Terms are stored as ``{exponent tuple: Fraction}`` with zero coefficients
never stored, so two polynomials are equal iff their term maps are equal.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

Chart = tuple  # tuple[str, ...]


class ChartMismatch(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed rational literal {value!r}") from exc
    raise TypeError(f"cannot use {type(value).__name__} {value!r} as an exact coefficient")


class Poly:
    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart: Sequence[str], terms: Mapping[tuple, object] | None = None):
        self.chart = tuple(chart)
        n = len(self.chart)
        clean = {}
        if terms:
            for exp, coef in terms.items():
                exp = tuple(exp)
                if len(exp) != n:
                    raise ValueError(f"exponent {exp} does not match chart of size {n}")
                c = as_fraction(coef)
                if c:
                    clean[exp] = clean.get(exp, 0) + c
                    if not clean[exp]:
                        del clean[exp]
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, chart: tuple, terms: dict) -> "Poly":
        # trusted constructor: terms already canonical
        p = object.__new__(cls)
        p.chart = chart
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, chart) -> "Poly":
        return cls._raw(tuple(chart), {})

    @classmethod
    def const(cls, chart, value) -> "Poly":
        chart = tuple(chart)
        c = as_fraction(value)
        return cls._raw(chart, {(0,) * len(chart): c} if c else {})

    @classmethod
    def var(cls, chart, name) -> "Poly":
        chart = tuple(chart)
        i = chart.index(name) if isinstance(name, str) else int(name)
        exp = [0] * len(chart)
        exp[i] = 1
        return cls._raw(chart, {tuple(exp): Fraction(1)})

    @classmethod
    def variables(cls, chart) -> tuple:
        chart = tuple(chart)
        return tuple(cls.var(chart, i) for i in range(len(chart)))

    # -- basic queries --------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.chart), Fraction(0))

    def free_indices(self) -> set:
        """Indices of chart coordinates that actually occur."""
        used = set()
        for e in self.terms:
            used.update(i for i, k in enumerate(e) if k)
        return used

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.chart == other.chart and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.const(self.chart, other).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self.terms.items())))
        return self._hash

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.chart != self.chart:
                raise ChartMismatch(f"chart {other.chart} != {self.chart}")
            return other
        return Poly.const(self.chart, other)

    def __add__(self, other):
        other = self._coerce(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.chart, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.chart, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "Poly":
        c = as_fraction(c)
        if not c:
            return Poly.zero(self.chart)
        return Poly._raw(self.chart, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Poly.zero(self.chart)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple([a + b for a, b in zip(e1, e2)])
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.chart, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = Poly.const(self.chart, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def diff(self, var) -> "Poly":
        i = self.chart.index(var) if isinstance(var, str) else var
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1:]
                out[ne] = c * k
        return Poly._raw(self.chart, out)

    def gradient(self) -> tuple:
        return tuple(self.diff(i) for i in range(len(self.chart)))

    # -- evaluation and change of chart ----------------------------------
    def __call__(self, point: Sequence):
        return self.evaluate(point)

    def evaluate(self, point: Sequence):
        if len(point) != len(self.chart):
            raise ValueError("point dimension does not match chart")
        total = 0
        for e, c in self.terms.items():
            t = c
            for x, k in zip(point, e):
                if k:
                    t = t * x ** k
            total = total + t
        return total

    def rechart(self, new_chart: Sequence[str]) -> "Poly":
        """Re-express on another chart by coordinate name.

        Coordinates of the old chart that are missing from ``new_chart`` must
        not occur in the polynomial.
        """
        new_chart = tuple(new_chart)
        if new_chart == self.chart:
            return self
        pos = {name: i for i, name in enumerate(new_chart)}
        m = len(new_chart)
        out = {}
        for e, c in self.terms.items():
            ne = [0] * m
            for name, k in zip(self.chart, e):
                if k:
                    if name not in pos:
                        raise ChartMismatch(f"{name} occurs but is not in target chart")
                    ne[pos[name]] = k
            out[tuple(ne)] = c
        return Poly._raw(new_chart, out)

    def compose(self, images: Sequence["Poly"]) -> "Poly":
        """Substitute ``images[i]`` for the i-th coordinate (all on a common chart)."""
        if len(images) != len(self.chart):
            raise ValueError("need one image per coordinate")
        if not images:
            return self
        target = images[0].chart
        powers = [dict() for _ in images]

        def power(i, k):
            cache = powers[i]
            if k not in cache:
                cache[k] = images[i] ** k
            return cache[k]

        result = Poly.zero(target)
        for e, c in self.terms.items():
            t = Poly.const(target, c)
            for i, k in enumerate(e):
                if k:
                    t = t * power(i, k)
            result = result + t
        return result

    # -- printing -------------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda ec: ec[0], reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}" for name, k in zip(self.chart, e) if k
            )
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{mag}*{mono}"
            else:
                body = str(mag)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Poly({str(self)!r} on {self.chart})"

    # -- serialization --------------------------------------------------
    def to_json(self) -> list:
        return [{"coef": str(c), "exp": list(e)} for e, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, chart, data: Iterable[Mapping]) -> "Poly":
        terms = {}
        n = len(tuple(chart))
        for item in data:
            if set(item) != {"coef", "exp"}:
                raise ValueError(f"poly term must have exactly 'coef' and 'exp', got {sorted(item)}")
            exp = tuple(int(k) for k in item["exp"])
            if len(exp) != n or any(k < 0 for k in exp):
                raise ValueError(f"bad exponent vector {item['exp']!r} for chart of size {n}")
            c = as_fraction(item["coef"])
            terms[exp] = terms.get(exp, 0) + c
        return cls(chart, terms)


def poly_from_dense_quadratic(chart, Q, c, h0=0) -> Poly:
    """Build ``1/2 x^T Q x + c^T x + h0`` from rational matrix data."""
    chart = tuple(chart)
    n = len(chart)
    terms = {}
    for i in range(n):
        for j in range(i, n):
            q = as_fraction(Q[i][j])
            if not q:
                continue
            e = [0] * n
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = q / 2 if i == j else q
    for i in range(n):
        ci = as_fraction(c[i])
        if ci:
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = terms.get(tuple(e), 0) + ci
    if as_fraction(h0):
        terms[(0,) * n] = as_fraction(h0)
    return Poly(chart, terms)


def poly_from_affine(chart, row, offset=0) -> Poly:
    """``sum_j row[j] x_j + offset``."""
    chart = tuple(chart)
    n = len(chart)
    terms = {}
    for j, a in enumerate(row):
        a = as_fraction(a)
        if a:
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = a
    if as_fraction(offset):
        terms[(0,) * n] = as_fraction(offset)
    return Poly._raw(chart, terms)
