"""Strict JSON system specs and serialisation of pipeline objects.

Two input formats are accepted. The symbolic one::

    {"chart": ["x", "y", "z"],
     "omega": {"kind": "constant", "matrix": [["0", "1", "0"], ["-1", "0", "0"], ["0", "0", "0"]]},
     "H": [{"coef": "1/2", "exp": [2, 0, 0]}, ...],
     "gamma": {"components": [[...terms...], [...], [...]]},
     "connection": {...}, "kernel": [...], "metadata": {...}}

with ``omega`` alternatively ``{"kind": "polynomial", "components": [{"idx": [i, j], "poly": [...]}]}``,
and the matrix one, ``{"format": "linear_quadratic", "labels", "Omega", "Q", "c", "A", "b", "h0"}``.
Unknown keys are rejected everywhere.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .exact import QMatrix
from .forms import DiffForm, VecField
from .gnh import LinQuadSystem
from .linear import LinearThickening, MatrixConnection
from .poly import Poly, as_fraction
from .presys import Connection, PreSympSystem
from .lagrange import velocity_names
from .thicken import MU_PREFIX, ThickenedSystem, thicken


class SpecError(ValueError):
    """Malformed input; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise SpecError(path, f"expected an object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise SpecError(path, f"missing field(s) {missing}")
    extra = sorted(set(obj) - set(required) - set(optional))
    if extra:
        raise SpecError(path, f"unknown field(s) {extra}")


def _rational(v, path) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise SpecError(path, f"rationals must be integers or 'p/q' strings, got {v!r}")
    try:
        return as_fraction(v)
    except (ValueError, TypeError) as exc:
        raise SpecError(path, str(exc)) from None


def _matrix(data, path, shape=None) -> QMatrix:
    if not isinstance(data, list) or any(not isinstance(r, list) for r in data):
        raise SpecError(path, "expected a list of rows")
    rows = [[_rational(v, f"{path}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(data)]
    ncols = len(rows[0]) if rows else 0
    for i, r in enumerate(rows):
        if len(r) != ncols:
            raise SpecError(f"{path}[{i}]", f"row has {len(r)} entries, expected {ncols}")
    if shape is not None and (len(rows), ncols) != shape:
        raise SpecError(path, f"shape {(len(rows), ncols)} != expected {shape}")
    return QMatrix.from_dense(rows) if rows else QMatrix(0, shape[1] if shape else 0)


def _vector(data, path, n) -> list:
    if not isinstance(data, list) or len(data) != n:
        raise SpecError(path, f"expected a list of {n} rationals")
    return [_rational(v, f"{path}[{i}]") for i, v in enumerate(data)]


def _check_antisymmetric(M: QMatrix, path):
    for i in range(M.nrows):
        for j in range(i, M.ncols):
            if M[i, j] != -M[j, i]:
                raise SpecError(path, f"not antisymmetric: [{i}][{j}] = {M[i, j]} but [{j}][{i}] = {M[j, i]}")


def _poly(data, chart, path) -> Poly:
    if not isinstance(data, list):
        raise SpecError(path, "a polynomial is a list of {coef, exp} terms")
    n = len(chart)
    terms = {}
    for k, item in enumerate(data):
        p = f"{path}[{k}]"
        _keys(item, p, ("coef", "exp"))
        exp = item["exp"]
        if not isinstance(exp, list) or len(exp) != n or any(not isinstance(e, int) or isinstance(e, bool) or e < 0 for e in exp):
            raise SpecError(f"{p}.exp", f"expected {n} non-negative integers")
        c = _rational(item["coef"], f"{p}.coef")
        terms[tuple(exp)] = terms.get(tuple(exp), 0) + c
    return Poly(chart, terms)


def _form(data, chart, degree, path) -> DiffForm:
    _keys(data, path, ("components",), ("chart", "degree"))
    if "chart" in data and tuple(data["chart"]) != tuple(chart):
        raise SpecError(f"{path}.chart", "does not match the system chart")
    if "degree" in data and data["degree"] != degree:
        raise SpecError(f"{path}.degree", f"expected {degree}")
    comps = {}
    for k, item in enumerate(data["components"]):
        p = f"{path}.components[{k}]"
        _keys(item, p, ("idx", "poly"))
        idx = item["idx"]
        if not isinstance(idx, list) or len(idx) != degree or any(not isinstance(i, int) or not 0 <= i < len(chart) for i in idx):
            raise SpecError(f"{p}.idx", f"expected {degree} indices into the chart")
        if len(set(idx)) != degree:
            raise SpecError(f"{p}.idx", "repeated index")
        comps[tuple(idx)] = _poly(item["poly"], chart, f"{p}.poly")
    seen = set()
    for idx in comps:
        key = tuple(sorted(idx))
        if key in seen:
            raise SpecError(path, f"component {list(key)} given twice")
        seen.add(key)
    return DiffForm(chart, degree, comps)


def _field(data, chart, path) -> VecField:
    if isinstance(data, dict):
        _keys(data, path, ("components",), ("chart",))
        if "chart" in data and tuple(data["chart"]) != tuple(chart):
            raise SpecError(f"{path}.chart", "does not match the system chart")
        comps = data["components"]
        path = f"{path}.components"
    else:
        comps = data
    if not isinstance(comps, list) or len(comps) != len(chart):
        raise SpecError(path, f"expected {len(chart)} component polynomials")
    return VecField(chart, [_poly(c, chart, f"{path}[{i}]") for i, c in enumerate(comps)])


def parse_connection(data, chart, path="connection") -> Connection:
    _keys(data, path, ("forms", "vertical_basis"), ("chart",))
    if "chart" in data and tuple(data["chart"]) != tuple(chart):
        raise SpecError(f"{path}.chart", "does not match the system chart")
    forms = tuple(_form(f, chart, 1, f"{path}.forms[{k}]") for k, f in enumerate(data["forms"]))
    basis = tuple(_field(v, chart, f"{path}.vertical_basis[{k}]") for k, v in enumerate(data["vertical_basis"]))
    try:
        return Connection(forms, basis)
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None


def _chart(data, path="chart", reserved=True) -> tuple:
    if not isinstance(data, list) or not all(isinstance(c, str) and c for c in data):
        raise SpecError(path, "expected a list of coordinate names")
    if not data:
        raise SpecError(path, "empty chart")
    if len(set(data)) != len(data):
        raise SpecError(path, "duplicate coordinate names")
    if not reserved:
        return tuple(data)
    for i, c in enumerate(data):
        if c.startswith(MU_PREFIX):
            raise SpecError(f"{path}[{i}]", f"{c!r} uses the prefix {MU_PREFIX!r} reserved for fibre coordinates")
    try:
        velocity_names(data)
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None
    return tuple(data)


def parse_system(data):
    """Build a PreSympSystem or LinQuadSystem from decoded JSON."""
    if not isinstance(data, dict):
        raise SpecError("", "a system spec is a JSON object")
    if data.get("format") == "linear_quadratic":
        return parse_linear(data)
    if "format" in data:
        raise SpecError("format", f"unknown format {data['format']!r}")
    _keys(data, "", ("chart", "omega", "H"), ("gamma", "connection", "kernel", "metadata"))
    chart = _chart(data["chart"])
    n = len(chart)
    om = data["omega"]
    if not isinstance(om, dict) or om.get("kind") not in ("constant", "polynomial"):
        raise SpecError("omega.kind", "must be 'constant' or 'polynomial'")
    if om["kind"] == "constant":
        _keys(om, "omega", ("kind", "matrix"))
        M = _matrix(om["matrix"], "omega.matrix", (n, n))
        _check_antisymmetric(M, "omega.matrix")
        omega = DiffForm.from_matrix(chart, M.to_dense())
    else:
        _keys(om, "omega", ("kind", "components"))
        omega = _form({"components": om["components"]}, chart, 2, "omega")
    H = _poly(data["H"], chart, "H")
    gamma = _field(data["gamma"], chart, "gamma") if data.get("gamma") is not None else None
    kernel = None
    if data.get("kernel") is not None:
        if not isinstance(data["kernel"], list):
            raise SpecError("kernel", "expected a list of vector fields")
        kernel = tuple(_field(v, chart, f"kernel[{k}]") for k, v in enumerate(data["kernel"]))
    conn = parse_connection(data["connection"], chart) if data.get("connection") is not None else None
    meta = data.get("metadata")
    if meta is not None and not isinstance(meta, dict):
        raise SpecError("metadata", "expected an object")
    try:
        return PreSympSystem(chart, omega, H, gamma, kernel, conn, meta)
    except ValueError as exc:  # pragma: no cover - the field checks above catch these first
        raise SpecError("", str(exc)) from None


def parse_linear(data) -> LinQuadSystem:
    _keys(data, "", ("format", "labels", "Omega", "Q", "c"), ("A", "b", "h0", "metadata"))
    labels = _chart(data["labels"], "labels")
    n = len(labels)
    Omega = _matrix(data["Omega"], "Omega", (n, n))
    _check_antisymmetric(Omega, "Omega")
    Q = _matrix(data["Q"], "Q", (n, n))
    if not Q.is_symmetric():
        raise SpecError("Q", "not symmetric")
    c = _vector(data["c"], "c", n)
    A = b = None
    if ("A" in data) != ("b" in data):
        raise SpecError("A", "'A' and 'b' must be given together")
    if "A" in data:
        A = _matrix(data["A"], "A", (n, n))
        b = _vector(data["b"], "b", n)
    h0 = _rational(data.get("h0", 0), "h0")
    meta = data.get("metadata")
    if meta is not None and not isinstance(meta, dict):
        raise SpecError("metadata", "expected an object")
    return LinQuadSystem(Omega, Q, c, A, b, h0, labels, meta)


def loads(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return data


def parse_spec(path_or_text, text: str | None = None):
    """Read a spec from a path ("-" for stdin is handled by the CLI) or raw text."""
    if text is None:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    return parse_system(loads(text))


def input_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# writers


def _mat_json(M: QMatrix) -> list:
    return [[str(v) for v in row] for row in M.to_dense()]


def system_to_spec(sys: PreSympSystem) -> dict:
    out = {"chart": list(sys.chart)}
    if sys.omega.is_constant():
        out["omega"] = {"kind": "constant",
                        "matrix": [[str(v) for v in row] for row in sys.omega.constant_matrix()]}
    else:
        out["omega"] = {"kind": "polynomial", "components": sys.omega.to_json()["components"]}
    out["H"] = sys.H.to_json()
    if sys.gamma is not None:
        out["gamma"] = {"components": sys.gamma.to_json()["components"]}
    if sys.kernel is not None:
        out["kernel"] = [v.to_json()["components"] for v in sys.kernel]
    if sys.connection is not None:
        out["connection"] = connection_to_json(sys.connection)
    if sys.metadata:
        out["metadata"] = sys.metadata
    return out


def connection_to_json(P: Connection) -> dict:
    return {"forms": [{"components": f.to_json()["components"]} for f in P.forms],
            "vertical_basis": [v.to_json()["components"] for v in P.vertical_basis]}


def linear_to_spec(lq: LinQuadSystem) -> dict:
    out = {"format": "linear_quadratic", "labels": list(lq.labels), "Omega": _mat_json(lq.Omega),
           "Q": _mat_json(lq.Q), "c": [str(v) for v in lq.c]}
    if lq.A is not None:
        out["A"] = _mat_json(lq.A)
        out["b"] = [str(v) for v in lq.b]
    if lq.h0:
        out["h0"] = str(lq.h0)
    if lq.metadata:
        out["metadata"] = lq.metadata
    return out


def spec_of(obj) -> dict:
    return linear_to_spec(obj) if isinstance(obj, LinQuadSystem) else system_to_spec(obj)


def thickened_to_json(t: ThickenedSystem) -> dict:
    out = {
        "format": "thickened",
        "base": system_to_spec(t.base),
        "connection": connection_to_json(t.connection),
        "extended_chart": list(t.extended_chart),
        "theta_P": {"components": t.theta_P.to_json()["components"]},
        "omega_tilde": {"components": t.omega_tilde.to_json()["components"]},
    }
    if t.gamma_tilde is not None:
        out["gamma_tilde"] = {"components": t.gamma_tilde.to_json()["components"]}
    if t.H_tilde is not None:
        out["H_tilde"] = t.H_tilde.to_json()
    return out


def thickened_from_json(data) -> ThickenedSystem:
    """Rebuild by re-running the construction, then insist the stored blocks agree."""
    _keys(data, "", ("format", "base", "connection", "extended_chart", "theta_P", "omega_tilde"),
          ("gamma_tilde", "H_tilde", "report"))
    base = parse_system(data["base"])
    if not isinstance(base, PreSympSystem):
        raise SpecError("base", "expected a symbolic system")
    P = parse_connection(data["connection"], base.chart)
    t = thicken(base, P)
    ext = _chart(data["extended_chart"], "extended_chart", reserved=False)
    if ext != t.extended_chart:
        raise SpecError("extended_chart", f"expected {list(t.extended_chart)}")
    if _form(data["theta_P"], ext, 1, "theta_P") != t.theta_P:
        raise SpecError("theta_P", "does not match the thickening of base by connection")
    if _form(data["omega_tilde"], ext, 2, "omega_tilde") != t.omega_tilde:
        raise SpecError("omega_tilde", "does not match the thickening of base by connection")
    gt = _field(data["gamma_tilde"], ext, "gamma_tilde") if "gamma_tilde" in data else None
    Ht = _poly(data["H_tilde"], ext, "H_tilde") if "H_tilde" in data else None
    return t.with_dynamics(gt, Ht)


def linear_thickened_to_json(t: LinearThickening) -> dict:
    out = {
        "format": "linear_thickened",
        "base": linear_to_spec(t.base),
        "connection": {"labels": list(t.connection.labels), "P": _mat_json(t.connection.P),
                       "V": _mat_json(t.connection.V)},
        "labels": list(t.labels),
        "Omega_tilde": _mat_json(t.Omega_tilde),
    }
    if t.A_tilde is not None:
        out["A_tilde"] = _mat_json(t.A_tilde)
        out["b_tilde"] = [str(v) for v in t.b_tilde]
    if t.Q_tilde is not None:
        out["Q_tilde"] = _mat_json(t.Q_tilde)
        out["c_tilde"] = [str(v) for v in t.c_tilde]
    return out


def linear_thickened_from_json(data) -> LinearThickening:
    from .linear import thicken_lq

    _keys(data, "", ("format", "base", "connection", "labels", "Omega_tilde"),
          ("A_tilde", "b_tilde", "Q_tilde", "c_tilde", "report"))
    base = parse_linear(data["base"])
    cd = data["connection"]
    _keys(cd, "connection", ("labels", "P", "V"))
    n = base.n
    r = len(cd["labels"])
    conn = MatrixConnection(tuple(int(i) for i in cd["labels"]), _matrix(cd["P"], "connection.P", (r, n)) if r else QMatrix(0, n),
                            _matrix(cd["V"], "connection.V", (n, r)) if r else QMatrix(n, 0))
    t = thicken_lq(base, conn)
    m = t.dim
    if _matrix(data["Omega_tilde"], "Omega_tilde", (m, m)) != t.Omega_tilde:
        raise SpecError("Omega_tilde", "does not match the thickening of base by connection")
    kw = {}
    if "A_tilde" in data:
        kw["A_tilde"] = _matrix(data["A_tilde"], "A_tilde", (m, m))
        kw["b_tilde"] = _vector(data["b_tilde"], "b_tilde", m)
    if "Q_tilde" in data:
        kw["Q_tilde"] = _matrix(data["Q_tilde"], "Q_tilde", (m, m))
        kw["c_tilde"] = _vector(data["c_tilde"], "c_tilde", m)
    from dataclasses import replace

    return replace(t, **kw)


def lagrangian_to_json(lag) -> dict:
    return {"format": "lagrangian", "base_chart": list(lag.base_chart), "tangent_chart": list(lag.tangent_chart),
            "L": lag.L.to_json(), "L_text": str(lag.L),
            "theta": None if lag.theta is None else {"components": lag.theta.to_json()["components"]}}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
