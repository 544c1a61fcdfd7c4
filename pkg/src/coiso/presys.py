"""Pre-symplectic Hamiltonian systems, their kernels and connections."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .exact import QMatrix, kernel_frame
from .forms import DiffForm, VecField, apply_form, d, interior, lie_bracket
from .poly import Poly
from .report import Check, Report

# symbolic principal-Pfaffian enumeration is exponential in the chart size
MAX_SYMBOLIC_RANK_CHART = 14


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class Connection:
    """Projector P = sum_j P_j (x) V^j onto the kernel distribution."""

    forms: tuple
    vertical_basis: tuple

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        object.__setattr__(self, "vertical_basis", tuple(self.vertical_basis))
        if len(self.forms) != len(self.vertical_basis):
            raise ValueError("need one 1-form per vertical basis field")
        for f in self.forms:
            if f.degree != 1:
                raise ValueError("connection forms must be 1-forms")

    @property
    def rank(self) -> int:
        return len(self.forms)

    @property
    def chart(self):
        if self.forms:
            return self.forms[0].chart
        return None

    def is_constant(self) -> bool:
        return all(f.is_constant() for f in self.forms) and all(v.is_constant() for v in self.vertical_basis)

    def project(self, Y: VecField) -> VecField:
        out = VecField.zero(Y.chart)
        for Pj, Vj in zip(self.forms, self.vertical_basis):
            c = apply_form(Pj, Y)
            if c:
                out = out + Vj * c
        return out

    def horizontal(self, Y: VecField) -> VecField:
        return Y - self.project(Y)

    def horizontal_frame(self, chart) -> list:
        """(1 - P)(d_a) for every coordinate, paired with the coordinate name."""
        return [(name, self.horizontal(VecField.coordinate(chart, name))) for name in chart]

    def certify(self, chart) -> Report:
        rep = Report("connection")
        duality = []
        for j, Pj in enumerate(self.forms):
            for i, Vi in enumerate(self.vertical_basis):
                r = apply_form(Pj, Vi) - int(i == j)
                if r:
                    duality.append(f"P_{j + 1}(V^{i + 1}) - delta = {r}")
        rep.add(Check("duality", "fail" if duality else "pass", "; ".join(duality)))
        idem = []
        for name in chart:
            PY = self.project(VecField.coordinate(chart, name))
            r = self.project(PY) - PY
            if not r.is_zero():
                idem.append(f"{name}: {r}")
        rep.add(Check("idempotency", "fail" if idem else "pass", "; ".join(idem)))
        return rep

    def to_json(self) -> dict:
        return {
            "forms": [f.to_json() for f in self.forms],
            "vertical_basis": [v.to_json() for v in self.vertical_basis],
        }

    @classmethod
    def from_json(cls, data, chart) -> "Connection":
        extra = set(data) - {"forms", "vertical_basis", "chart"}
        if extra:
            raise ValueError(f"unknown connection fields {sorted(extra)}")
        chart = tuple(data.get("chart", chart))
        forms = [DiffForm.from_json({**f, "chart": f.get("chart", chart)}) for f in data["forms"]]
        basis = [VecField.from_json(v, chart) for v in data["vertical_basis"]]
        return cls(tuple(forms), tuple(basis))


@dataclass(frozen=True)
class PreSympSystem:
    chart: tuple
    omega: DiffForm
    H: Poly
    gamma: VecField | None = None
    kernel: tuple | None = None
    connection: Connection | None = None
    metadata: dict = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "chart", tuple(self.chart))
        if not self.chart:
            raise ValueError("empty chart")
        if len(set(self.chart)) != len(self.chart):
            raise ValueError("duplicate coordinate names in chart")
        if self.omega.degree != 2 or self.omega.chart != self.chart:
            raise ValueError("omega must be a 2-form on the system chart")
        if self.H.chart != self.chart:
            raise ValueError("H must live on the system chart")
        if self.gamma is not None and self.gamma.chart != self.chart:
            raise ValueError("gamma must live on the system chart")
        if self.kernel is not None:
            object.__setattr__(self, "kernel", tuple(self.kernel))

    @property
    def dim(self) -> int:
        return len(self.chart)

    def with_gamma(self, gamma: VecField) -> "PreSympSystem":
        from dataclasses import replace

        return replace(self, gamma=gamma)


# ---------------------------------------------------------------------------
# rank / kernel


def _pfaffians(M, size: int) -> dict:
    """All principal Pfaffians of the given even size, keyed by index tuple."""
    memo: dict = {(): Poly.const(M[0][0].chart, 1)}

    def pf(S: tuple):
        if S in memo:
            return memo[S]
        i = S[0]
        total = Poly.zero(M[0][0].chart)
        for k in range(1, len(S)):
            j = S[k]
            a = M[i][j]
            if not a:
                continue
            rest = S[1:k] + S[k + 1:]
            sub = pf(rest)
            if sub:
                term = a * sub
                total = total + (term if k % 2 == 1 else -term)
        memo[S] = total
        return total

    n = len(M)
    return {S: pf(S) for S in combinations(range(n), size)}


def generic_rank(omega: DiffForm, samples: int = 4, seed: int = 0) -> int:
    rng = random.Random(seed)
    M = omega.matrix()
    best = 0
    for _ in range(samples):
        pt = [Fraction(rng.randint(-50, 50), rng.randint(1, 17)) for _ in omega.chart]
        best = max(best, QMatrix.from_dense([[p.evaluate(pt) for p in row] for row in M]).rank())
    return best


def rank_report(omega: DiffForm) -> Check:
    if omega.is_constant():
        r = QMatrix.from_dense(omega.constant_matrix()).rank()
        return Check("constant_rank", "pass", "", {"rank": r, "kernel_dim": len(omega.chart) - r, "constant": True})
    r = generic_rank(omega)
    n = len(omega.chart)
    if n > MAX_SYMBOLIC_RANK_CHART:
        return Check("constant_rank", "fail", "chart too large for the symbolic rank certificate",
                     {"rank": r, "kernel_dim": n - r})
    if r == 0:
        return Check("constant_rank", "pass", "", {"rank": 0, "kernel_dim": n})
    pfs = _pfaffians(omega.matrix(), r)
    certified = [S for S, p in pfs.items() if p.is_constant() and p]
    if certified:
        return Check("constant_rank", "pass", "", {"rank": r, "kernel_dim": n - r,
                                                    "certificate": [omega.chart[i] for i in certified[0]]})
    locus = sorted({str(p) for p in pfs.values() if p})
    return Check("constant_rank", "fail", "rank drops where all of these vanish: " + ", ".join(locus),
                 {"rank": r, "kernel_dim": n - r, "locus": locus})


def kernel_basis(omega: DiffForm, candidates: Sequence[VecField] | None = None) -> list:
    """Basis of ker omega.

    Constant omega: exact elimination. Otherwise ``candidates`` must be given and
    are only verified (i_V omega = 0).
    """
    if candidates is not None:
        for j, V in enumerate(candidates):
            r = interior(V, omega)
            if not r.is_zero():
                raise KernelError(f"candidate V^{j + 1} is not in the kernel: i_V omega = {r}")
        return list(candidates)
    if not omega.is_constant():
        raise KernelError("non-constant omega: supply a candidate kernel basis")
    M = QMatrix.from_dense(omega.constant_matrix())
    return [VecField.from_vector(omega.chart, v) for v in M.nullspace()]


def default_connection(omega: DiffForm, kernel: Sequence[VecField]) -> Connection:
    """Constant connection whose horizontal space is spanned by coordinate directions.

    Coordinates are taken greedily in chart order as long as they stay
    independent of the kernel; the remaining coordinates label the kernel, the
    kernel basis is re-normalised to be the identity on them, and the P_j are
    their differentials.
    """
    chart = omega.chart
    n = len(chart)
    if not kernel:
        return Connection((), ())
    for V in kernel:
        if not V.is_constant():
            raise KernelError("default connection needs a constant kernel basis")
    labels, Vred = kernel_frame([V.constant_vector() for V in kernel], n)
    basis = tuple(VecField.from_vector(chart, Vred.column(j)) for j in range(len(labels)))
    forms = tuple(DiffForm.coordinate(chart, i) for i in labels)
    return Connection(forms, basis)


# ---------------------------------------------------------------------------
# validation


def validate(sys: PreSympSystem) -> Report:
    rep = Report("validate")
    rep.add(Check.exact_zero("closed", d(sys.omega)))
    if sys.gamma is not None:
        rep.add(Check.exact_zero("hamiltonian", interior(sys.gamma, sys.omega) - d(DiffForm.function(sys.H))))
    else:
        rep.add(Check("hamiltonian", "skip", "", {"reason": "no dynamics supplied"}))
    rk = rep.add(rank_report(sys.omega))
    if sys.kernel is not None:
        bad = [f"V^{j + 1}: {interior(V, sys.omega)}" for j, V in enumerate(sys.kernel)
               if not interior(V, sys.omega).is_zero()]
        expected = rk.detail.get("kernel_dim")
        if expected is not None and len(sys.kernel) != expected:
            bad.append(f"{len(sys.kernel)} kernel fields supplied, kernel dimension is {expected}")
        rep.add(Check("kernel", "fail" if bad else "pass", "; ".join(bad)))
    if sys.connection is not None:
        for c in sys.connection.certify(sys.chart).checks:
            rep.add(Check("connection_" + c.name, c.status, c.residual))
        bad = [f"V^{j + 1}" for j, V in enumerate(sys.connection.vertical_basis)
               if not interior(V, sys.omega).is_zero()]
        rep.add(Check("connection_vertical_in_kernel", "fail" if bad else "pass", ", ".join(bad)))
    return rep


def flatness_check(P: Connection, chart, gamma: VecField | None = None) -> Report:
    """Full mode: P([H^a, H^b]) over the horizontal frame. Weak mode (gamma
    given): only P([Gamma_H, H^a])."""
    chart = tuple(chart)
    frame = [(name, H) for name, H in P.horizontal_frame(chart) if not H.is_zero()]
    if gamma is None:
        rep = Report("flatness (full)")
        for (na, Ha), (nb, Hb) in combinations(frame, 2):
            rep.add(Check.exact_zero(f"P[H_{na}, H_{nb}]", P.project(lie_bracket(Ha, Hb))))
    else:
        rep = Report("flatness (weak)")
        GH = P.horizontal(gamma)
        for na, Ha in frame:
            rep.add(Check.exact_zero(f"P[Gamma_H, H_{na}]", P.project(lie_bracket(GH, Ha))))
    return rep


def split(gamma: VecField, P: Connection):
    """(Gamma_V, Gamma_H) with P(Gamma_V) = Gamma_V and P(Gamma_H) = 0."""
    GV = P.project(gamma)
    GH = gamma - GV
    assert P.project(GV) == GV, "projector is not idempotent on Gamma_V"
    assert P.project(GH).is_zero(), "horizontal part has a vertical component"
    return GV, GH
