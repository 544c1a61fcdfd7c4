"""Matrix fast path for the linear-quadratic class.

Every stage of the symbolic pipeline has a closed matrix form when omega is
constant, H quadratic and Gamma affine. With P (r x n) the connection
covectors and V (n x r) the kernel frame:

    Omega_tilde = [[Omega, -P^T], [P, 0]]
    B           = P A V                      (vertical part of A in the frame)
    A_tilde     = [[A, 0], [0, -B^T]]        (requires P A = B P)
    Q_tilde     = Omega_tilde^T A_tilde,  c_tilde = Omega_tilde^T b_tilde

This is what the lattice models run through; the symbolic modules remain the
reference and the test-suite cross-checks the two on small systems.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .exact import QMatrix, kernel_frame
from .gnh import LinQuadSystem, projected_dynamics_check, run_gnh
from .report import Check, Report
from .thicken import mu_names

_ZERO = Fraction(0)


def _nnz_text(M: QMatrix, what: str) -> str:
    k = M.nnz()
    return f"{k} nonzero entries in {what}" if k else ""


def _vec_text(v, what: str) -> str:
    k = sum(1 for x in v if x)
    return f"{k} nonzero entries in {what}" if k else ""


@dataclass(frozen=True)
class MatrixConnection:
    labels: tuple  # coordinate indices labelling the kernel
    P: QMatrix  # r x n
    V: QMatrix  # n x r

    @property
    def rank(self) -> int:
        return self.P.nrows

    def projector(self) -> QMatrix:
        return self.V @ self.P

    def to_json(self, names=None) -> dict:
        return {
            "labels": [names[i] if names else i for i in self.labels],
            "P": self.P.to_json(),
            "V": self.V.to_json(),
        }


def kernel_vectors(Omega: QMatrix) -> list:
    return Omega.nullspace()


def default_matrix_connection(lq: LinQuadSystem) -> MatrixConnection:
    n = lq.n
    ker = kernel_vectors(lq.Omega)
    if not ker:
        return MatrixConnection((), QMatrix(0, n), QMatrix(n, 0))
    labels, V = kernel_frame(ker, n)
    P = QMatrix(len(labels), n, [{i: Fraction(1)} for i in labels])
    return MatrixConnection(tuple(labels), P, V)


def validate_lq(lq: LinQuadSystem, conn: MatrixConnection | None = None) -> Report:
    rep = Report("validate")
    rep.add(Check("antisymmetric", "pass" if lq.Omega.is_antisymmetric() else "fail"))
    if lq.A is not None:
        RA, Rb = lq.hamiltonian_residual()
        text = "; ".join(t for t in (_nnz_text(RA, "Omega^T A - Q"), _vec_text(Rb, "Omega^T b - c")) if t)
        rep.add(Check("hamiltonian", "fail" if text else "pass", text))
    else:
        rep.add(Check("hamiltonian", "skip", "", {"reason": "no dynamics supplied"}))
    r = lq.Omega.rank()
    rep.add(Check("constant_rank", "pass", "", {"rank": r, "kernel_dim": lq.n - r, "constant": True}))
    if conn is not None:
        for c in certify_matrix_connection(conn, lq.Omega).checks:
            rep.add(c)
    return rep


def certify_matrix_connection(conn: MatrixConnection, Omega: QMatrix) -> Report:
    rep = Report("connection")
    r = conn.rank
    rep.add(Check("connection_duality", "pass" if conn.P @ conn.V == QMatrix.identity(r) else "fail"))
    VP = conn.projector()
    rep.add(Check.exact_zero("connection_idempotency", _nnz_text(VP @ VP - VP, "P o P - P")))
    rep.add(Check.exact_zero("connection_vertical_in_kernel", _nnz_text(Omega @ conn.V, "Omega V")))
    kdim = Omega.ncols - Omega.rank()
    rep.add(Check("connection_rank", "pass" if r == kdim else "fail",
                  "" if r == kdim else f"rank {r} != kernel dimension {kdim}"))
    return rep


@dataclass(frozen=True)
class LinearThickening:
    base: LinQuadSystem
    connection: MatrixConnection
    labels: tuple
    Omega_tilde: QMatrix
    A_tilde: QMatrix | None = None
    b_tilde: list | None = None
    Q_tilde: QMatrix | None = None
    c_tilde: list | None = None

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def dim(self) -> int:
        return len(self.labels)

    def as_lq(self) -> LinQuadSystem:
        if self.Q_tilde is None:
            raise ValueError("recover the extended Hamiltonian first")
        return LinQuadSystem(self.Omega_tilde, self.Q_tilde, self.c_tilde, self.A_tilde, self.b_tilde,
                             Fraction(0), self.labels)


def thicken_lq(lq: LinQuadSystem, conn: MatrixConnection) -> LinearThickening:
    r = conn.rank
    Ot = QMatrix.block([[lq.Omega, -conn.P.T], [conn.P, QMatrix.zeros(r, r)]]) if r else lq.Omega.copy()
    return LinearThickening(lq, conn, lq.labels + mu_names(r), Ot)


def coisotropy_check_lq(t: LinearThickening) -> Check:
    n = t.n
    top = t.Omega_tilde.submatrix(range(n), range(n))
    return Check.exact_zero("coisotropy", _nnz_text(top - t.base.Omega, "zero-section pullback minus omega"))


def nondegeneracy_check_lq(t: LinearThickening) -> Report:
    rep = Report("nondegeneracy")
    rk = t.Omega_tilde.rank()
    ok = rk == t.dim
    rep.add(Check("global", "pass" if ok else "fail", "" if ok else f"rank {rk} < {t.dim}", {"rank": rk}))
    return rep


def lift_lq(t: LinearThickening) -> LinearThickening:
    from .lift import LiftError

    lq, conn = t.base, t.connection
    if lq.A is None:
        raise ValueError("system has no dynamics to lift")
    r = conn.rank
    if not r:
        return replace(t, A_tilde=lq.A.copy(), b_tilde=list(lq.b))
    PA = conn.P @ lq.A
    B = PA @ conn.V
    obstruction = PA - B @ conn.P
    if not obstruction.is_zero():
        raise LiftError("no vertical lift preserves theta_P for this field (P A != B P)",
                        _nnz_text(obstruction, "P A - B P"))
    At = QMatrix.block([[lq.A, QMatrix.zeros(lq.n, r)], [QMatrix.zeros(r, lq.n), -B.T]])
    return replace(t, A_tilde=At, b_tilde=list(lq.b) + [_ZERO] * r)


def _lie(M: QMatrix, Om: QMatrix) -> QMatrix:
    # matrix of L_X of a constant 2-form along X = M x + m
    return M.T @ Om + Om @ M


def invariance_check_lq(t: LinearThickening) -> Report:
    """L_{Gamma_tilde} omega_tilde and the three terms of its decomposition."""
    if t.A_tilde is None:
        raise ValueError("lift the dynamics first")
    rep = Report("invariance")
    n, r = t.n, t.connection.rank
    lq, conn = t.base, t.connection
    pull = QMatrix.block([[lq.Omega, None], [None, QMatrix.zeros(r, r)]]) if r else lq.Omega
    dtheta = t.Omega_tilde - pull
    if r:
        VPA = conn.projector() @ lq.A
        AV = QMatrix.block([[VPA, None], [None, t.A_tilde.submatrix(range(n, n + r), range(n, n + r))]])
        AH = QMatrix.block([[lq.A - VPA, None], [None, QMatrix.zeros(r, r)]])
    else:
        AV = QMatrix.zeros(n, n)
        AH = lq.A
    total = _lie(t.A_tilde, t.Omega_tilde)
    base_term = _lie(t.A_tilde, pull)
    vert = _lie(AV, dtheta)
    horiz = _lie(AH, dtheta)
    rep.add(Check.exact_zero("L_gamma_tilde(omega_tilde)", _nnz_text(total, "L omega_tilde")))
    rep.add(Check.exact_zero("L_gamma_tilde(pullback omega)", _nnz_text(base_term, "L pullback omega")))
    rep.add(Check.exact_zero("L_gamma_tilde_V(d theta_P)", _nnz_text(vert, "vertical term")))
    rep.add(Check.exact_zero("L_gamma_tilde_H(d theta_P)", _nnz_text(horiz, "horizontal term")))
    rep.add(Check.exact_zero("decomposition_sums", _nnz_text(total - base_term - vert - horiz, "decomposition")))
    return rep


def recover_hamiltonian_lq(t: LinearThickening) -> LinearThickening:
    """Q_tilde = Omega_tilde^T A_tilde must be symmetric; H_tilde(0) = 0."""
    from .lift import LiftError

    OT = t.Omega_tilde.T
    Qt = OT @ t.A_tilde
    if not Qt.is_symmetric():
        raise LiftError("i_{gamma_tilde} omega_tilde is not closed; invariance failed upstream",
                        _nnz_text(Qt - Qt.T, "asymmetric part"))
    return replace(t, Q_tilde=Qt, c_tilde=OT @ t.b_tilde)


def hamiltonian_restriction_check_lq(t: LinearThickening) -> Check:
    n = t.n
    dQ = t.Q_tilde.submatrix(range(n), range(n)) - t.base.Q
    dc = [u - v for u, v in zip(t.c_tilde[:n], t.base.c)]
    text = "; ".join(s for s in (_nnz_text(dQ, "Q block"), _vec_text(dc, "c block")) if s)
    return Check("H_tilde_restricts_to_H", "fail" if text else "pass", text,
                 {"offset": str(-t.base.h0)} if not text else {})


# ---------------------------------------------------------------------------
# Lagrangian side. L = -theta_a v^a - H_tilde with theta_a = Theta[a][b] x^b.


def potential_matrix(Om: QMatrix) -> QMatrix:
    """Theta with theta_a = Theta[a][b] x^b the radial potential of the constant form Om."""
    return Om.T.scale(Fraction(1, 2))


def lagrangian_check_lq(t: LinearThickening) -> Report:
    rep = Report("lagrangian")
    Theta = potential_matrix(t.Omega_tilde)
    # d theta has (b, a) component d_b theta_a - d_a theta_b = Theta[a][b] - Theta[b][a]
    dtheta = Theta.T - Theta
    rep.add(Check.exact_zero("d_theta_equals_omega_tilde", _nnz_text(dtheta - t.Omega_tilde, "d theta - omega_tilde")))
    return rep


def cartan_lq(t: LinearThickening) -> LinQuadSystem:
    """Cartan data (omega_L, E_L) of the synthesized Lagrangian on the tangent chart."""
    m = t.dim
    Theta = potential_matrix(t.Omega_tilde)
    # lambda = dL/dv = -Theta q; omega_L = -d(lambda_a dq^a): component (b, a) is Theta[a][b] - Theta[b][a]
    OmL = Theta.T - Theta
    Z = QMatrix.zeros(m, m)
    Omega_L = QMatrix.block([[OmL, Z], [Z, Z]])
    Q_L = QMatrix.block([[t.Q_tilde, Z], [Z, Z]])
    c_L = list(t.c_tilde) + [_ZERO] * m
    labels = t.labels + tuple("v_" + s for s in t.labels)
    return LinQuadSystem(Omega_L, Q_L, c_L, None, None, Fraction(0), labels)


def theorem1_lq(t: LinearThickening, run_gnh_check: bool = True) -> Report:
    rep = Report("theorem1")
    m = t.dim
    cd = cartan_lq(t)
    # pullback along the section q -> (q, A q + b): J^T Omega_L J with J = [I; A]
    J = QMatrix.block([[QMatrix.identity(m)], [t.A_tilde]])
    on_section = J.T @ cd.Omega @ J
    rep.add(Check.exact_zero("omega_L_along_gamma_section", _nnz_text(on_section - t.Omega_tilde, "pullback - omega_tilde")))
    Z = QMatrix.block([[QMatrix.identity(m)], [QMatrix.zeros(m, m)]])
    rep.add(Check.exact_zero("omega_L_along_zero_section",
                             _nnz_text(Z.T @ cd.Omega @ Z - t.Omega_tilde, "pullback - omega_tilde")))
    # E_L along the section: gradient J^T (Q_L J q + Q_L [0; b] + c_L)
    EQ = J.T @ cd.Q @ J
    shift = cd.Q @ ([_ZERO] * m + list(t.b_tilde))
    Ec = J.T @ [u + v for u, v in zip(shift, cd.c)]
    OT = t.Omega_tilde.T
    r1 = OT @ t.A_tilde - EQ
    r2 = [u - v for u, v in zip(OT @ t.b_tilde, Ec)]
    text = "; ".join(s for s in (_nnz_text(r1, "linear part"), _vec_text(r2, "offset")) if s)
    rep.add(Check("i_gamma_omega_equals_dE", "fail" if text else "pass", text))
    # Euler-Lagrange: W qdot = g with W = Omega_L block (as matrix W[a][b] = Omega[b][a]) and g = Q q + c
    W = cd.Omega.submatrix(range(m), range(m)).T
    r3 = W @ t.A_tilde - t.Q_tilde
    r4 = [u - v for u, v in zip(W @ t.b_tilde, t.c_tilde)]
    text = "; ".join(s for s in (_nnz_text(r3, "linear part"), _vec_text(r4, "offset")) if s)
    rep.add(Check("euler_lagrange_residual_on_gamma_tilde", "fail" if text else "pass", text))
    if W.rank() == m:
        X = W.solve(QMatrix.block([[t.Q_tilde, QMatrix.from_columns([t.c_tilde], m)]]))
        F = X.submatrix(range(m), range(m))
        f = X.column(m)
        ok = F == t.A_tilde and f == list(t.b_tilde)
        rep.add(Check("explicit_euler_lagrange_field", "pass" if ok else "fail",
                      "" if ok else "explicit field differs from gamma_tilde"))
    if run_gnh_check:
        chain = run_gnh(cd)
        rep.add(projected_dynamics_check(chain, t.A_tilde, t.b_tilde))
    return rep
