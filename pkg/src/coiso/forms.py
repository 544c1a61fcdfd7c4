"""Exterior calculus over polynomial coefficients.

Forms are stored sparsely, keyed by strictly increasing index tuples into the
chart. Antisymmetry is handled once, at construction, by sorting indices and
tracking the permutation sign; afterwards equality is plain dict equality.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

from .poly import ChartMismatch, Poly, as_fraction


class NotClosedError(ValueError):
    def __init__(self, residual: "DiffForm"):
        super().__init__(f"form is not closed; d(a) = {residual}")
        self.residual = residual


def join_signed(parts) -> str:
    """Join printed terms, turning a leading minus into a binary one."""
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def _sort_with_sign(idx):
    """Sort an index tuple, returning (sign, sorted) or (0, None) on a repeat."""
    idx = list(idx)
    sign = 1
    # insertion sort; k is tiny
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return 0, None
    return sign, tuple(idx)


class DiffForm:
    __slots__ = ("chart", "degree", "comps")

    def __init__(self, chart: Sequence[str], degree: int, comps: Mapping[tuple, Poly] | None = None):
        self.chart = tuple(chart)
        n = len(self.chart)
        if degree < 0:
            raise ValueError(f"negative degree {degree}")
        self.degree = degree
        clean: dict = {}
        for idx, p in (comps or {}).items():
            idx = tuple(idx)
            if len(idx) != degree or any(not 0 <= i < n for i in idx):
                raise ValueError(f"bad index tuple {idx} for a {degree}-form on {n} coordinates")
            if not isinstance(p, Poly):
                p = Poly.const(self.chart, p)
            elif p.chart != self.chart:
                raise ChartMismatch(f"component chart {p.chart} != {self.chart}")
            sign, key = _sort_with_sign(idx)
            if not sign or p.is_zero():
                continue
            q = p if sign > 0 else -p
            prev = clean.get(key)
            q = q if prev is None else prev + q
            if q.is_zero():
                clean.pop(key, None)
            else:
                clean[key] = q
        self.comps = clean

    @classmethod
    def _raw(cls, chart, degree, comps):
        f = object.__new__(cls)
        f.chart = chart
        f.degree = degree
        f.comps = comps
        return f

    @classmethod
    def zero(cls, chart, degree) -> "DiffForm":
        return cls._raw(tuple(chart), degree, {})

    @classmethod
    def function(cls, f: Poly) -> "DiffForm":
        return cls._raw(f.chart, 0, {(): f} if f else {})

    @classmethod
    def coordinate(cls, chart, name) -> "DiffForm":
        """The differential dx of a chart coordinate."""
        chart = tuple(chart)
        i = chart.index(name) if isinstance(name, str) else int(name)
        return cls._raw(chart, 1, {(i,): Poly.const(chart, 1)})

    @classmethod
    def from_covector(cls, chart, row) -> "DiffForm":
        chart = tuple(chart)
        return cls(chart, 1, {(i,): Poly.const(chart, a) for i, a in enumerate(row) if as_fraction(a)})

    @classmethod
    def from_matrix(cls, chart, matrix) -> "DiffForm":
        """2-form with omega(d_a, d_b) = matrix[a][b]; only the upper triangle is read."""
        chart = tuple(chart)
        n = len(chart)
        comps = {}
        for a in range(n):
            for b in range(a + 1, n):
                v = matrix[a][b]
                if isinstance(v, Poly):
                    if v:
                        comps[(a, b)] = v
                elif as_fraction(v):
                    comps[(a, b)] = Poly.const(chart, v)
        return cls(chart, 2, comps)

    def as_function(self) -> Poly:
        if self.degree != 0:
            raise ValueError("not a 0-form")
        return self.comps.get((), Poly.zero(self.chart))

    def component(self, idx) -> Poly:
        sign, key = _sort_with_sign(idx)
        if not sign:
            return Poly.zero(self.chart)
        p = self.comps.get(key)
        if p is None:
            return Poly.zero(self.chart)
        return p if sign > 0 else -p

    def is_zero(self) -> bool:
        return not self.comps

    def is_constant(self) -> bool:
        return all(p.is_constant() for p in self.comps.values())

    def matrix(self):
        """Matrix of a 2-form, entries omega(d_a, d_b) as Polys."""
        if self.degree != 2:
            raise ValueError("matrix() needs a 2-form")
        n = len(self.chart)
        z = Poly.zero(self.chart)
        M = [[z] * n for _ in range(n)]
        for (a, b), p in self.comps.items():
            M[a][b] = p
            M[b][a] = -p
        return M

    def constant_matrix(self):
        """Rational matrix of a constant-coefficient 2-form."""
        if not self.is_constant():
            raise ValueError("form has non-constant coefficients")
        return [[p.constant_term() for p in row] for row in self.matrix()]

    def __eq__(self, other):
        if not isinstance(other, DiffForm):
            return NotImplemented
        return self.chart == other.chart and self.degree == other.degree and self.comps == other.comps

    def __hash__(self):
        return hash((self.chart, self.degree, frozenset(self.comps.items())))

    def _check(self, other: "DiffForm"):
        if other.chart != self.chart:
            raise ChartMismatch(f"chart {other.chart} != {self.chart}")
        if other.degree != self.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "DiffForm"):
        self._check(other)
        out = dict(self.comps)
        for k, p in other.comps.items():
            q = out.get(k)
            q = p if q is None else q + p
            if q.is_zero():
                out.pop(k, None)
            else:
                out[k] = q
        return DiffForm._raw(self.chart, self.degree, out)

    def __neg__(self):
        return DiffForm._raw(self.chart, self.degree, {k: -p for k, p in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        """Multiply by a function (Poly) or rational scalar."""
        if isinstance(f, Poly):
            if f.chart != self.chart:
                raise ChartMismatch("function chart differs from form chart")
            out = {}
            for k, p in self.comps.items():
                q = p * f
                if q:
                    out[k] = q
            return DiffForm._raw(self.chart, self.degree, out)
        c = as_fraction(f)
        if not c:
            return DiffForm.zero(self.chart, self.degree)
        return DiffForm._raw(self.chart, self.degree, {k: p.scale(c) for k, p in self.comps.items()})

    __rmul__ = __mul__

    def rechart(self, new_chart) -> "DiffForm":
        """Re-express on a chart containing every coordinate this form touches."""
        new_chart = tuple(new_chart)
        if new_chart == self.chart:
            return self
        pos = {name: i for i, name in enumerate(new_chart)}
        comps = {}
        for idx, p in self.comps.items():
            try:
                new_idx = tuple(pos[self.chart[i]] for i in idx)
            except KeyError as exc:
                raise ChartMismatch(f"{exc.args[0]} not in target chart") from None
            comps[new_idx] = p.rechart(new_chart)
        return DiffForm(new_chart, self.degree, comps)

    def evaluate(self, point):
        """Components at a point: {index tuple: value}."""
        return {k: p.evaluate(point) for k, p in self.comps.items()}

    def __str__(self):
        if not self.comps:
            return "0"
        if self.degree == 0:
            return str(self.comps[()])
        parts = []
        for idx in sorted(self.comps):
            basis = "^".join("d" + self.chart[i] for i in idx)
            p = self.comps[idx]
            s = str(p)
            if len(p.terms) > 1:
                s = f"({s})"
            parts.append(basis if s == "1" else ("-" + basis if s == "-1" else f"{s}*{basis}"))
        return join_signed(parts)

    def __repr__(self):
        return f"DiffForm[{self.degree}]({self})"

    def to_json(self) -> dict:
        return {
            "chart": list(self.chart),
            "degree": self.degree,
            "components": [{"idx": list(k), "poly": self.comps[k].to_json()} for k in sorted(self.comps)],
        }

    @classmethod
    def from_json(cls, data: Mapping, chart=None) -> "DiffForm":
        extra = set(data) - {"chart", "degree", "components"}
        if extra:
            raise ValueError(f"unknown form fields {sorted(extra)}")
        chart = tuple(data["chart"]) if "chart" in data else tuple(chart)
        comps = {}
        for item in data["components"]:
            if set(item) != {"idx", "poly"}:
                raise ValueError("form component needs exactly 'idx' and 'poly'")
            idx = tuple(int(i) for i in item["idx"])
            p = Poly.from_json(chart, item["poly"])
            sign, key = _sort_with_sign(idx)
            if not sign:
                raise ValueError(f"repeated index in {idx}")
            comps[key] = comps.get(key, Poly.zero(chart)) + (p if sign > 0 else -p)
        return cls(chart, int(data["degree"]), comps)


class VecField:
    __slots__ = ("chart", "comps")

    def __init__(self, chart: Sequence[str], comps: Sequence):
        self.chart = tuple(chart)
        if len(comps) != len(self.chart):
            raise ValueError(f"need {len(self.chart)} components, got {len(comps)}")
        out = []
        for p in comps:
            if not isinstance(p, Poly):
                p = Poly.const(self.chart, p)
            elif p.chart != self.chart:
                raise ChartMismatch(f"component chart {p.chart} != {self.chart}")
            out.append(p)
        self.comps = tuple(out)

    @classmethod
    def zero(cls, chart) -> "VecField":
        chart = tuple(chart)
        return cls(chart, [Poly.zero(chart)] * len(chart))

    @classmethod
    def coordinate(cls, chart, name) -> "VecField":
        """The coordinate field d/dx."""
        chart = tuple(chart)
        i = chart.index(name) if isinstance(name, str) else int(name)
        return cls(chart, [Poly.const(chart, int(j == i)) for j in range(len(chart))])

    @classmethod
    def from_vector(cls, chart, vec) -> "VecField":
        chart = tuple(chart)
        return cls(chart, [Poly.const(chart, v) for v in vec])

    @classmethod
    def affine(cls, chart, A, b=None) -> "VecField":
        """The field x -> A x + b."""
        from .poly import poly_from_affine

        chart = tuple(chart)
        n = len(chart)
        b = b if b is not None else [0] * n
        return cls(chart, [poly_from_affine(chart, A[i], b[i]) for i in range(n)])

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.comps)

    def is_constant(self) -> bool:
        return all(p.is_constant() for p in self.comps)

    def constant_vector(self):
        if not self.is_constant():
            raise ValueError("field is not constant")
        return [p.constant_term() for p in self.comps]

    def __eq__(self, other):
        if not isinstance(other, VecField):
            return NotImplemented
        return self.chart == other.chart and self.comps == other.comps

    def __hash__(self):
        return hash((self.chart, self.comps))

    def __add__(self, other: "VecField"):
        if other.chart != self.chart:
            raise ChartMismatch(f"chart {other.chart} != {self.chart}")
        return VecField(self.chart, [a + b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return VecField(self.chart, [-a for a in self.comps])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, f):
        if isinstance(f, Poly):
            return VecField(self.chart, [a * f for a in self.comps])
        c = as_fraction(f)
        return VecField(self.chart, [a.scale(c) for a in self.comps])

    __rmul__ = __mul__

    def apply(self, f: Poly) -> Poly:
        """Directional derivative X[f]."""
        if f.chart != self.chart:
            raise ChartMismatch("function chart differs from field chart")
        out = Poly.zero(self.chart)
        for i, Xi in enumerate(self.comps):
            if Xi:
                df = f.diff(i)
                if df:
                    out = out + Xi * df
        return out

    def rechart(self, new_chart) -> "VecField":
        """Re-express on a larger chart; new coordinates get zero components."""
        new_chart = tuple(new_chart)
        if new_chart == self.chart:
            return self
        old = dict(zip(self.chart, self.comps))
        comps = []
        for name in new_chart:
            p = old.pop(name, None)
            comps.append(Poly.zero(new_chart) if p is None else p.rechart(new_chart))
        for name, p in old.items():
            if p:
                raise ChartMismatch(f"component along {name} would be dropped")
        return VecField(new_chart, comps)

    def evaluate(self, point):
        return [p.evaluate(point) for p in self.comps]

    def __str__(self):
        parts = []
        for name, p in zip(self.chart, self.comps):
            if p:
                s = str(p)
                if len(p.terms) > 1:
                    s = f"({s})"
                parts.append(f"d_{name}" if s == "1" else (f"-d_{name}" if s == "-1" else f"{s}*d_{name}"))
        return join_signed(parts)

    def __repr__(self):
        return f"VecField({self})"

    def to_json(self) -> dict:
        return {"chart": list(self.chart), "components": [p.to_json() for p in self.comps]}

    @classmethod
    def from_json(cls, data, chart=None) -> "VecField":
        if isinstance(data, Mapping):
            extra = set(data) - {"chart", "components"}
            if extra:
                raise ValueError(f"unknown vector field fields {sorted(extra)}")
            chart = tuple(data.get("chart", chart))
            comps = data["components"]
        else:
            comps = data
        chart = tuple(chart)
        return cls(chart, [Poly.from_json(chart, c) for c in comps])


# ---------------------------------------------------------------------------
# operations


def _same_chart(*objs):
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart != chart:
            raise ChartMismatch(f"chart {o.chart} != {chart}")


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    _same_chart(a, b)
    deg = a.degree + b.degree
    out: dict = {}
    for I, p in a.comps.items():
        sI = set(I)
        for J, q in b.comps.items():
            if sI.intersection(J):
                continue
            sign, K = _sort_with_sign(I + J)
            term = p * q
            if sign < 0:
                term = -term
            prev = out.get(K)
            out[K] = term if prev is None else prev + term
    return DiffForm._raw(a.chart, deg, {k: v for k, v in out.items() if v})


def d(a: DiffForm) -> DiffForm:
    """Exterior derivative."""
    n = len(a.chart)
    out: dict = {}
    for I, p in a.comps.items():
        for i in range(n):
            if i in I:
                continue
            dp = p.diff(i)
            if not dp:
                continue
            # dx^i ^ dx^I: move i into place
            pos = sum(1 for j in I if j < i)
            K = I[:pos] + (i,) + I[pos:]
            term = dp if pos % 2 == 0 else -dp
            prev = out.get(K)
            out[K] = term if prev is None else prev + term
    return DiffForm._raw(a.chart, a.degree + 1, {k: v for k, v in out.items() if v})


def interior(X: VecField, a: DiffForm) -> DiffForm:
    """Contraction i_X a (inserting X in the first slot)."""
    _same_chart(X, a)
    if a.degree == 0:
        raise ValueError("cannot contract a 0-form")
    out: dict = {}
    for I, p in a.comps.items():
        for k, i in enumerate(I):
            Xi = X.comps[i]
            if not Xi:
                continue
            K = I[:k] + I[k + 1:]
            term = Xi * p
            if k % 2:
                term = -term
            prev = out.get(K)
            out[K] = term if prev is None else prev + term
    return DiffForm._raw(a.chart, a.degree - 1, {k: v for k, v in out.items() if v})


def lie_bracket(X: VecField, Y: VecField) -> VecField:
    _same_chart(X, Y)
    return VecField(X.chart, [X.apply(Yi) - Y.apply(Xi) for Xi, Yi in zip(X.comps, Y.comps)])


def lie_derivative(X: VecField, a: DiffForm) -> DiffForm:
    """L_X a, computed with Cartan's formula d i_X a + i_X d a."""
    _same_chart(X, a)
    if a.degree == 0:
        return DiffForm.function(X.apply(a.as_function()))
    return d(interior(X, a)) + interior(X, d(a))


def apply_form(a: DiffForm, X: VecField) -> Poly:
    """Pairing of a 1-form with a vector field."""
    if a.degree != 1:
        raise ValueError("apply_form needs a 1-form")
    return interior(X, a).as_function()


def substitute(a: DiffForm, assignment: Mapping[str, Poly], new_chart: Sequence[str] | None = None) -> DiffForm:
    """Pull ``a`` back along the map given by ``assignment``.

    Every coordinate of ``a.chart`` is either assigned a Poly on ``new_chart``
    or must itself be a coordinate of ``new_chart``. If ``new_chart`` is not
    given it is the old chart minus the assigned coordinates.
    """
    if new_chart is None:
        new_chart = tuple(c for c in a.chart if c not in assignment)
    new_chart = tuple(new_chart)
    for name, p in assignment.items():
        if name not in a.chart:
            raise ValueError(f"assigned coordinate {name!r} is not in the chart")
        if not isinstance(p, Poly):
            assignment = dict(assignment)
            assignment[name] = Poly.const(new_chart, p)
        elif p.chart != new_chart:
            raise ValueError(f"image of {name!r} lives on {p.chart}, expected {new_chart}")
    images = []
    for name in a.chart:
        if name in assignment:
            images.append(assignment[name])
        elif name in new_chart:
            images.append(Poly.var(new_chart, name))
        else:
            raise ValueError(f"coordinate {name!r} neither assigned nor present in the new chart")
    differentials = [d(DiffForm.function(p)) for p in images]
    deg = a.degree
    result = DiffForm.zero(new_chart, deg)
    for I, p in a.comps.items():
        coef = p.compose(images)
        if not coef:
            continue
        term = DiffForm.function(coef) if deg == 0 else None
        if deg:
            acc = differentials[I[0]]
            for i in I[1:]:
                acc = wedge(acc, differentials[i])
                if acc.is_zero():
                    break
            term = acc * coef
        result = result + term
    return result


def homotopy_potential(a: DiffForm, check: bool = True) -> DiffForm:
    """Radial homotopy operator anchored at the origin.

    For closed ``a`` of degree k >= 1 returns h(a) with d h(a) = a. A monomial
    coefficient of total degree m picks up the factor 1/(m + k).
    """
    if a.degree == 0:
        raise ValueError("homotopy operator needs degree >= 1")
    if check:
        da = d(a)
        if not da.is_zero():
            raise NotClosedError(da)
    chart = a.chart
    n = len(chart)
    k = a.degree
    out: dict = {}
    for I, p in a.comps.items():
        for pos, i in enumerate(I):
            K = I[:pos] + I[pos + 1:]
            sign = -1 if pos % 2 else 1
            acc = out.setdefault(K, {})
            for e, c in p.terms.items():
                ne = e[:i] + (e[i] + 1,) + e[i + 1:]
                v = sign * c / (sum(e) + k)
                acc[ne] = acc.get(ne, 0) + v
    comps = {}
    for K, terms in out.items():
        poly = Poly(chart, terms)
        if poly:
            comps[K] = poly
    return DiffForm._raw(chart, k - 1, comps)


def euler_field(chart) -> VecField:
    chart = tuple(chart)
    return VecField(chart, list(Poly.variables(chart)))
