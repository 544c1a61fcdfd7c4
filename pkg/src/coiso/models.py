"""Reference systems: rotor, nonflat control, random corpus, lattice Maxwell."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import QMatrix
from .forms import DiffForm, VecField, wedge
from .gnh import LinQuadSystem, to_symbolic
from .linear import default_matrix_connection
from .poly import Poly
from .presys import Connection, PreSympSystem

MAX_RANDOM_DIM = 12


def rotor_example() -> PreSympSystem:
    chart = ("x", "y", "z")
    x, y, z = Poly.variables(chart)
    omega = wedge(DiffForm.coordinate(chart, "x"), DiffForm.coordinate(chart, "y"))
    H = (x * x + y * y).scale(Fraction(1, 2))
    gamma = VecField(chart, [y, -x, z])
    return PreSympSystem(chart, omega, H, gamma, metadata={"model": "rotor"})


def _nonflat_connection(chart) -> Connection:
    y = Poly.var(chart, "y")
    P1 = DiffForm.coordinate(chart, "z") - DiffForm.coordinate(chart, "x") * y
    return Connection((P1,), (VecField.coordinate(chart, "z"),))


def nonflat_example():
    """(system, connection) with P_1 = dz - y dx, V^1 = d_z: a curved horizontal
    distribution and a dynamics Gamma = d_y + d_z whose horizontal part feels it."""
    chart = ("x", "y", "z")
    x = Poly.var(chart, "x")
    one = Poly.const(chart, 1)
    omega = wedge(DiffForm.coordinate(chart, "x"), DiffForm.coordinate(chart, "y"))
    gamma = VecField(chart, [Poly.zero(chart), one, one])
    P = _nonflat_connection(chart)
    sys = PreSympSystem(chart, omega, -x, gamma, connection=P, metadata={"model": "nonflat"})
    return sys, P


def weak_flat_example():
    """Same curved connection, purely vertical dynamics Gamma = d_z, H = 0.

    Full flatness fails but the weak condition holds because Gamma_H = 0.
    """
    chart = ("x", "y", "z")
    omega = wedge(DiffForm.coordinate(chart, "x"), DiffForm.coordinate(chart, "y"))
    gamma = VecField.coordinate(chart, "z")
    P = _nonflat_connection(chart)
    sys = PreSympSystem(chart, omega, Poly.zero(chart), gamma, connection=P, metadata={"model": "weak_flat"})
    return sys, P


# ---------------------------------------------------------------------------
# random constant-form corpus


def _unimodular(rng: random.Random, n: int) -> QMatrix:
    L = QMatrix.identity(n)
    U = QMatrix.identity(n)
    for i in range(n):
        for j in range(i):
            L[i, j] = rng.randint(-1, 1)
            U[j, i] = rng.randint(-1, 1)
    return L @ U


def _random_symmetric(rng: random.Random, n: int, lo=-3, hi=3) -> QMatrix:
    M = QMatrix.zeros(n, n)
    for i in range(n):
        for j in range(i, n):
            v = rng.randint(lo, hi)
            M[i, j] = v
            M[j, i] = v
    return M


def random_linear_system(dim: int, kernel_dim: int, seed: int) -> LinQuadSystem:
    """Matrix form of :func:`random_system`."""
    if not 0 <= kernel_dim <= dim:
        raise ValueError(f"kernel dimension {kernel_dim} outside 0..{dim}")
    if dim < 1 or dim > MAX_RANDOM_DIM:
        raise ValueError(f"dimension {dim} outside 1..{MAX_RANDOM_DIM}")
    rank = dim - kernel_dim
    if rank % 2:
        raise ValueError(f"infeasible: rank {rank} of an antisymmetric form must be even")
    rng = random.Random(seed)
    n = dim
    J0 = QMatrix.zeros(n, n)
    for k in range(rank // 2):
        J0[2 * k, 2 * k + 1] = 1
        J0[2 * k + 1, 2 * k] = -1
    U = _unimodular(rng, n)
    Omega = U.T @ J0 @ U
    # a throwaway system just to reuse the default frame
    probe = LinQuadSystem(Omega, QMatrix.zeros(n, n), [0] * n)
    conn = default_matrix_connection(probe)
    Pi = QMatrix.identity(n) - conn.projector()
    Q = Pi.T @ _random_symmetric(rng, n) @ Pi
    c = Pi.T @ [Fraction(rng.randint(-3, 3)) for _ in range(n)]
    OT = Omega.T
    sol = OT.solve(QMatrix.block([[Q, QMatrix.from_columns([c], n)]]))
    if sol is None:  # pragma: no cover - excluded by construction
        raise AssertionError("projected Hamiltonian has no compatible dynamics")
    A = Pi @ sol.submatrix(range(n), range(n))
    b = Pi @ sol.column(n)
    r = conn.rank
    if r:
        Bv = QMatrix.from_dense([[rng.randint(-2, 2) for _ in range(r)] for _ in range(r)])
        A = A + conn.V @ Bv @ conn.P
        beta = [Fraction(rng.randint(-2, 2)) for _ in range(r)]
        b = [u + v for u, v in zip(b, conn.V @ beta)]
    labels = tuple(f"x{i + 1}" for i in range(n))
    return LinQuadSystem(Omega, Q, c, A, b, Fraction(0), labels,
                         {"model": "random", "dim": dim, "kernel_dim": kernel_dim, "seed": seed})


def random_system(dim: int, kernel_dim: int, seed: int) -> PreSympSystem:
    """Constant omega of rank dim - kernel_dim (unimodular congruence of the
    canonical form), a quadratic H whose differential annihilates the kernel, and
    Gamma = (horizontal Hamiltonian solution) + (vertical part depending on the
    kernel coordinates only, so that the vertical lift exists)."""
    lq = random_linear_system(dim, kernel_dim, seed)
    chart, omega, H, gamma = to_symbolic(lq)
    return PreSympSystem(chart, omega, H, gamma,
                         metadata={"model": "random", "dim": dim, "kernel_dim": kernel_dim, "seed": seed})


def corpus_specs(count: int = 100, seed: int = 0, max_dim: int = 8, max_kernel: int = 3) -> list:
    """Deterministic list of (dim, kernel_dim, seed) triples covering every feasible shape."""
    shapes = [(n, k) for n in range(1, max_dim + 1) for k in range(0, min(max_kernel, n) + 1) if (n - k) % 2 == 0]
    rng = random.Random(seed)
    out = []
    for i in range(count):
        n, k = shapes[i] if i < len(shapes) else rng.choice(shapes)
        out.append((n, k, seed * 100003 + i))
    return out


def corpus(count: int = 100, seed: int = 0, max_dim: int = 8) -> list:
    return [random_system(n, k, s) for n, k, s in corpus_specs(count, seed, max_dim)]


# ---------------------------------------------------------------------------
# lattice Maxwell


class Lattice:
    """Periodic N^3 grid. Sites s = i + N j + N^2 k; edges and faces are (axis, site)."""

    def __init__(self, N: int):
        if N < 2:
            raise ValueError("lattice needs N >= 2")
        self.N = N
        self.sites = N ** 3

    def site(self, i, j, k) -> int:
        N = self.N
        return (i % N) + N * (j % N) + N * N * (k % N)

    def shift(self, s: int, axis: int) -> int:
        N = self.N
        ijk = [s % N, (s // N) % N, s // (N * N)]
        ijk[axis] += 1
        return self.site(*ijk)

    def grad(self) -> QMatrix:
        """d0: sites -> edges, forward differences."""
        S = self.sites
        M = QMatrix(3 * S, S)
        for a in range(3):
            for s in range(S):
                row = M.rows[a * S + s]
                row[self.shift(s, a)] = Fraction(1)
                row[s] = Fraction(-1)
        return M

    def curl(self) -> QMatrix:
        """d1: edges -> faces; face (c, s) spans axes (a, b) with (a, b, c) cyclic."""
        S = self.sites
        M = QMatrix(3 * S, 3 * S)
        for c in range(3):
            a, b = (c + 1) % 3, (c + 2) % 3
            for s in range(S):
                row = M.rows[c * S + s]
                for col, v in ((a * S + s, 1), (b * S + self.shift(s, a), 1),
                               (a * S + self.shift(s, b), -1), (b * S + s, -1)):
                    w = row.get(col, 0) + v
                    if w:
                        row[col] = Fraction(w)
                    else:
                        row.pop(col, None)
        return M

    def face_div(self) -> QMatrix:
        """d2: faces -> cells."""
        S = self.sites
        M = QMatrix(S, 3 * S)
        for s in range(S):
            row = M.rows[s]
            for c in range(3):
                for col, v in ((c * S + self.shift(s, c), 1), (c * S + s, -1)):
                    w = row.get(col, 0) + v
                    if w:
                        row[col] = Fraction(w)
                    else:
                        row.pop(col, None)
        return M

    def div(self) -> QMatrix:
        """Adjoint-difference divergence on edge fields: div = d0^T."""
        return self.grad().T


MAXWELL_CONVENTION = {
    "omega": "sum over edges of dA_e ^ dE_e, restricted to div E = 0",
    "H": "1/2 (|E|^2 + |curl A|^2)",
    "gamma": "A0' = 0, A' = E + grad A0, E' = -curl^T curl A",
    "div": "d0^T (adjoint of the forward-difference gradient)",
    "coordinates": "A0 (all sites), lam (gauge, sites 1..), a (div-free A part), e (div-free E)",
    "embedding": "A = grad[:, 1:] lam + C a, E = C e, C = rational basis of ker div",
}


@dataclass
class LatticeMaxwell:
    N: int
    system: LinQuadSystem
    ambient: QMatrix  # 7N^3 x dim: (A0, A, E) = ambient @ x
    grad: QMatrix
    curl: QMatrix
    face_div: QMatrix
    C: QMatrix
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.system.n

    def ambient_numpy(self) -> np.ndarray:
        return self.ambient.to_numpy()

    def gauss_residual(self, states: np.ndarray) -> float:
        """max |div E| over an array of parametrized states (rows)."""
        S = self.N ** 3
        E_rows = self.ambient_numpy()[4 * S:7 * S]
        div = self.grad.T.to_numpy()
        states = np.atleast_2d(states)[:, :self.dim]
        return float(np.max(np.abs(states @ (div @ E_rows).T))) if states.size else 0.0

    def gauss_exact(self) -> bool:
        """div E vanishes identically on the parametrization."""
        S = self.N ** 3
        E_rows = self.ambient.submatrix(range(4 * S, 7 * S), range(self.dim))
        return (self.grad.T @ E_rows).is_zero()

    def to_json(self) -> dict:
        return {"N": self.N, "labels": list(self.system.labels), "ambient": self.ambient.to_json(),
                "metadata": self.metadata}


def lattice_maxwell(N: int) -> LatticeMaxwell:
    lat = Lattice(N)
    S = lat.sites
    d0, d1, d2 = lat.grad(), lat.curl(), lat.face_div()
    div = d0.T
    C = QMatrix.from_columns(div.nullspace(), 3 * S)
    pivots = set(div.rref()[1])
    free = [i for i in range(3 * S) if i not in pivots]  # C restricted to these rows is the identity
    G = d0.submatrix(range(3 * S), range(1, S))
    m = C.ncols
    nA0, nl = S, S - 1
    n = nA0 + nl + 2 * m
    oA0, ol, oa, oe = 0, nA0, nA0 + nl, nA0 + nl + m
    CtC = C.T @ C
    K = d1 @ C
    KtK = K.T @ K
    Omega = QMatrix(n, n)
    Q = QMatrix(n, n)
    for i in range(m):
        for j, v in CtC.rows[i].items():
            Omega.rows[oa + i][oe + j] = v
            Omega.rows[oe + j][oa + i] = -v
            Q.rows[oe + i][oe + j] = v
        for j, v in KtK.rows[i].items():
            Q.rows[oa + i][oa + j] = v
    A = QMatrix(n, n)
    for s in range(1, S):  # lam_s' = A0_s - A0_0
        A.rows[ol + s - 1] = {oA0 + s: Fraction(1), oA0: Fraction(-1)}
    for i in range(m):  # a' = e
        A.rows[oa + i] = {oe + i: Fraction(1)}
    # e' = coordinates of -curl^T curl C a in the basis C, read off at the free rows
    R = -(d1.T @ K)
    for j, f in enumerate(free):
        A.rows[oe + j] = {oa + k: v for k, v in R.rows[f].items()}
    labels = tuple([f"A0_{s}" for s in range(S)] + [f"lam_{s}" for s in range(1, S)]
                   + [f"a_{i}" for i in range(m)] + [f"e_{i}" for i in range(m)])
    meta = {"model": "lattice_maxwell", "N": N, "convention": MAXWELL_CONVENTION,
            "blocks": {"A0": [oA0, nA0], "lam": [ol, nl], "a": [oa, m], "e": [oe, m]}}
    lq = LinQuadSystem(Omega, Q, [0] * n, A, [0] * n, Fraction(0), labels, meta)
    amb = QMatrix(7 * S, n)
    for s in range(S):
        amb.rows[s] = {oA0 + s: Fraction(1)}
    for e in range(3 * S):
        row = {ol + k: v for k, v in G.rows[e].items()}
        row.update({oa + k: v for k, v in C.rows[e].items()})
        amb.rows[S + e] = row
        amb.rows[4 * S + e] = {oe + k: v for k, v in C.rows[e].items()}
    return LatticeMaxwell(N, lq, amb, d0, d1, d2, C, meta)


def lattice_identities(lm: LatticeMaxwell) -> dict:
    """Exact operator identities on the periodic grid."""
    S = lm.N ** 3
    return {
        "curl_grad_zero": (lm.curl @ lm.grad).is_zero(),
        "div_curl_zero": (lm.face_div @ lm.curl).is_zero(),
        "rank_grad": lm.grad.rank(),
        "rank_div": lm.grad.T.rank(),
        "expected_rank": S - 1,
        "gauss_exact": lm.gauss_exact(),
    }
