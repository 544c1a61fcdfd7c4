"""Pre-symplectic constraint algorithm for linear-quadratic systems.

Matrix convention, used everywhere in the toolkit: Omega[a][b] = omega(d_a, d_b),
so (i_X omega)_a = Omega[b][a] X^b and the Hamiltonian condition i_X omega = dH
reads  Omega^T X = Q x + c.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact import QMatrix
from .forms import DiffForm, VecField
from .poly import Poly, as_fraction, poly_from_dense_quadratic
from .report import Check


class NotLinearQuadratic(ValueError):
    pass


@dataclass
class LinQuadSystem:
    Omega: QMatrix
    Q: QMatrix
    c: list
    A: QMatrix | None = None
    b: list | None = None
    h0: Fraction = Fraction(0)
    labels: tuple | None = None
    metadata: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        n = self.Omega.nrows
        if self.Omega.shape != (n, n) or self.Q.shape != (n, n) or len(self.c) != n:
            raise ValueError("inconsistent dimensions")
        if not self.Omega.is_antisymmetric():
            raise ValueError("Omega is not antisymmetric")
        if not self.Q.is_symmetric():
            raise ValueError("Q is not symmetric")
        self.c = [as_fraction(v) for v in self.c]
        if (self.A is None) != (self.b is None):
            raise ValueError("A and b come together")
        if self.A is not None:
            if self.A.shape != (n, n) or len(self.b) != n:
                raise ValueError("inconsistent dynamics dimensions")
            self.b = [as_fraction(v) for v in self.b]
        if self.labels is None:
            self.labels = tuple(f"x{i}" for i in range(n))
        self.labels = tuple(self.labels)

    @property
    def n(self) -> int:
        return self.Omega.nrows

    def hamiltonian_residual(self):
        """(Omega^T A - Q, Omega^T b - c); both zero iff i_Gamma omega = dH."""
        if self.A is None:
            raise ValueError("no dynamics")
        OT = self.Omega.T
        return OT @ self.A - self.Q, [u - v for u, v in zip(OT @ self.b, self.c)]

    def to_json(self) -> dict:
        out = {
            "labels": list(self.labels),
            "Omega": self.Omega.to_json(),
            "Q": self.Q.to_json(),
            "c": [str(v) for v in self.c],
            "h0": str(self.h0),
        }
        if self.A is not None:
            out["A"] = self.A.to_json()
            out["b"] = [str(v) for v in self.b]
        return out


def to_linear_quadratic(obj) -> LinQuadSystem:
    """Matrix form of a PreSympSystem, ThickenedSystem or CartanData."""
    from .lagrange import CartanData
    from .presys import PreSympSystem
    from .thicken import ThickenedSystem

    if isinstance(obj, PreSympSystem):
        chart, omega, H, gamma = obj.chart, obj.omega, obj.H, obj.gamma
    elif isinstance(obj, ThickenedSystem):
        chart, omega, H, gamma = obj.extended_chart, obj.omega_tilde, obj.H_tilde, obj.gamma_tilde
        if H is None:
            H = Poly.zero(chart)
    elif isinstance(obj, CartanData):
        chart, omega, H, gamma = obj.chart, obj.omega_L, obj.E_L, None
    else:
        raise TypeError(f"cannot convert {type(obj).__name__}")
    if not omega.is_constant():
        raise NotLinearQuadratic("omega has non-constant coefficients")
    if H.degree() > 2:
        raise NotLinearQuadratic(f"Hamiltonian has degree {H.degree()} > 2")
    if gamma is not None and any(p.degree() > 1 for p in gamma.comps):
        raise NotLinearQuadratic("dynamics is not affine")
    n = len(chart)
    Omega = QMatrix.from_dense(omega.constant_matrix())
    grad = H.gradient()
    Q = QMatrix.from_dense([[g.diff(j).constant_term() for j in range(n)] for g in grad])
    c = [g.constant_term() for g in grad]
    A = b = None
    if gamma is not None:
        A = QMatrix.from_dense([[p.diff(j).constant_term() for j in range(n)] for p in gamma.comps])
        b = [p.constant_term() for p in gamma.comps]
    return LinQuadSystem(Omega, Q, c, A, b, H.constant_term(), chart)


def to_symbolic(lq: LinQuadSystem):
    """(chart, omega, H, gamma) from a LinQuadSystem; inverse of the above."""
    chart = lq.labels
    omega = DiffForm.from_matrix(chart, lq.Omega.to_dense())
    H = poly_from_dense_quadratic(chart, lq.Q.to_dense(), lq.c, lq.h0)
    gamma = VecField.affine(chart, lq.A.to_dense(), lq.b) if lq.A is not None else None
    return chart, omega, H, gamma


# ---------------------------------------------------------------------------


@dataclass
class AffineSubspace:
    """offset + span(rows of basis); basis in RREF, offset reduced against it."""

    offset: list
    basis: QMatrix
    pivots: list

    @classmethod
    def make(cls, offset, spanning: QMatrix) -> "AffineSubspace":
        R, piv = spanning.rref()
        off = [as_fraction(v) for v in offset]
        for r, p in zip(R.rows, piv):
            f = off[p]
            if f:
                for j, v in r.items():
                    off[j] -= f * v
        return cls(off, R, piv)

    @property
    def dim(self) -> int:
        return self.basis.nrows

    def columns(self) -> QMatrix:
        return self.basis.T

    def contains(self, x) -> bool:
        y = [as_fraction(v) - o for v, o in zip(x, self.offset)]
        for r, p in zip(self.basis.rows, self.pivots):
            f = y[p]
            if f:
                for j, v in r.items():
                    y[j] -= f * v
        return not any(y)

    def to_json(self) -> dict:
        return {"dim": self.dim, "basis": self.basis.to_json(), "offset": [str(v) for v in self.offset]}


@dataclass
class ConstraintChain:
    subspaces: list
    iterations: int
    empty: bool = False
    dynamics_matrix: QMatrix | None = None  # v = F x + f on the final subspace
    dynamics_offset: list | None = None
    freedom: list = field(default_factory=list)  # vectors in ker Omega^T cap T M_final

    @property
    def final(self) -> AffineSubspace | None:
        return None if self.empty else self.subspaces[-1]

    @property
    def dims(self) -> list:
        return [s.dim for s in self.subspaces]

    def to_json(self) -> dict:
        out = {
            "subspaces": [s.to_json() for s in self.subspaces],
            "iterations": self.iterations,
            "empty": self.empty,
        }
        if self.dynamics_matrix is not None:
            out["dynamics"] = {
                "F": self.dynamics_matrix.to_json(),
                "f": [str(v) for v in self.dynamics_offset],
                "freedom": [[str(v) for v in vec] for vec in self.freedom],
            }
        return out


def _constraint_step(lq: LinQuadSystem, M: AffineSubspace):
    """Points of M where Omega^T v = Q x + c has a solution v tangent to M."""
    B = M.columns()
    S = lq.Omega.T @ B
    Z = S.T.nullspace()  # z with z^T S = 0
    if not Z:
        return M
    Zm = QMatrix.from_dense(Z)
    G = Zm @ (lq.Q @ B)
    rhs0 = [u + v for u, v in zip(lq.Q @ M.offset, lq.c)]
    h = [-v for v in Zm @ rhs0]
    y = G.solve(h)
    if y is None:
        return None
    new_offset = [o + v for o, v in zip(M.offset, B @ y)]
    null = G.nullspace()
    if not null:
        return AffineSubspace.make(new_offset, QMatrix(0, lq.n))
    spanning = (B @ QMatrix.from_columns(null, M.dim)).T
    return AffineSubspace.make(new_offset, spanning)


def run_gnh(lq: LinQuadSystem, max_iter: int | None = None) -> ConstraintChain:
    n = lq.n
    max_iter = max_iter or n + 1
    M = AffineSubspace([Fraction(0)] * n, QMatrix.identity(n), list(range(n)))
    subspaces = [M]
    for it in range(1, max_iter + 1):
        nxt = _constraint_step(lq, M)
        if nxt is None:
            return ConstraintChain(subspaces, it, empty=True)
        if nxt.dim == M.dim:
            break
        subspaces.append(nxt)
        M = nxt
    else:
        raise RuntimeError("constraint algorithm did not stabilise")
    chain = ConstraintChain(subspaces, it)
    _final_dynamics(lq, chain)
    return chain


def _final_dynamics(lq: LinQuadSystem, chain: ConstraintChain):
    M = chain.final
    n, m = lq.n, M.dim
    B = M.columns()
    S = lq.Omega.T @ B
    # rhs columns: Q x0 + c, then Q B e_j
    base = [u + v for u, v in zip(lq.Q @ M.offset, lq.c)]
    QB = lq.Q @ B
    R = QMatrix(n, m + 1)
    for i in range(n):
        row = {0: base[i]} if base[i] else {}
        for j, v in QB.rows[i].items():
            row[j + 1] = v
        R.rows[i] = row
    X = S.solve(R)
    if X is None:
        raise AssertionError("final subspace admits no tangent solution")
    w0 = X.column(0)
    W = X.submatrix(range(m), range(1, m + 1))
    # y = (x - x0)[pivots]
    E = QMatrix(m, n, [{p: Fraction(1)} for p in M.pivots])
    F = B @ (W @ E)
    x0p = [M.offset[p] for p in M.pivots]
    f = [u - v for u, v in zip(B @ w0, B @ (W @ x0p))]
    chain.dynamics_matrix = F
    chain.dynamics_offset = f
    chain.freedom = [B @ v for v in S.nullspace()]


def projected_dynamics_check(chain: ConstraintChain, A: QMatrix, b: Sequence, stab_steps: int = 1) -> Check:
    """Final manifold = whole space after ``stab_steps`` iterations and the
    base block of the dynamics is unique and equal to x -> A x + b."""
    detail = {"dims": chain.dims, "iterations": chain.iterations}
    if chain.empty:
        return Check("gnh_final_manifold", "fail", "empty final manifold", detail)
    problems = []
    total = chain.subspaces[0].dim
    if chain.final.dim != total:
        problems.append(f"final manifold has dim {chain.final.dim} < {total}")
    if chain.iterations != stab_steps:
        problems.append(f"stabilised after {chain.iterations} iterations")
    k = A.nrows
    for vec in chain.freedom:
        if any(vec[:k]):
            problems.append("freedom has base components: projected dynamics not unique")
            break
    F = chain.dynamics_matrix
    top = F.submatrix(range(k), range(F.ncols))
    target = A if F.ncols == k else QMatrix.block([[A, QMatrix.zeros(k, F.ncols - k)]])
    if top != target:
        problems.append(f"projected linear part differs: {(top - target).nnz()} entries")
    if [v for v in chain.dynamics_offset[:k]] != [as_fraction(v) for v in b]:
        problems.append("projected offset differs")
    return Check("gnh_final_manifold", "fail" if problems else "pass", "; ".join(problems), detail)
