"""Exact sparse linear algebra over the rationals.

Rows are stored as ``{column: Fraction}`` dicts. Everything the toolkit does
with matrices (kernels, ranks, affine solves, congruences) goes through
:meth:`QMatrix.rref`, which uses Gauss-Jordan elimination with pivots taken
in column order, so results are reproducible.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .poly import as_fraction


class QMatrix:
    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, nrows: int, ncols: int, rows: Iterable[dict] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        if rows is None:
            self.rows = [dict() for _ in range(nrows)]
        else:
            self.rows = [dict(r) for r in rows]
            if len(self.rows) != nrows:
                raise ValueError("row count mismatch")

    # -- construction ---------------------------------------------------
    @classmethod
    def from_dense(cls, data: Sequence[Sequence]) -> "QMatrix":
        data = [list(r) for r in data]
        m = len(data)
        n = len(data[0]) if m else 0
        rows = []
        for r in data:
            if len(r) != n:
                raise ValueError("ragged matrix")
            row = {}
            for j, v in enumerate(r):
                v = as_fraction(v)
                if v:
                    row[j] = v
            rows.append(row)
        return cls(m, n, rows)

    @classmethod
    def zeros(cls, m: int, n: int) -> "QMatrix":
        return cls(m, n)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls(n, n, [{i: Fraction(1)} for i in range(n)])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], nrows: int | None = None) -> "QMatrix":
        cols = list(cols)
        m = nrows if nrows is not None else (len(cols[0]) if cols else 0)
        M = cls(m, len(cols))
        for j, col in enumerate(cols):
            for i, v in enumerate(col):
                v = as_fraction(v)
                if v:
                    M.rows[i][j] = v
        return M

    @classmethod
    def block(cls, grid: Sequence[Sequence["QMatrix | None"]]) -> "QMatrix":
        """Assemble from a grid of blocks; ``None`` is a zero block."""
        heights = []
        for brow in grid:
            h = next((b.nrows for b in brow if b is not None), None)
            if h is None:
                raise ValueError("every block row needs one explicit block")
            heights.append(h)
        widths = []
        for j in range(len(grid[0])):
            w = next((brow[j].ncols for brow in grid if brow[j] is not None), None)
            if w is None:
                raise ValueError("every block column needs one explicit block")
            widths.append(w)
        M = cls(sum(heights), sum(widths))
        r0 = 0
        for bi, brow in enumerate(grid):
            c0 = 0
            for bj, b in enumerate(brow):
                if b is not None:
                    if b.nrows != heights[bi] or b.ncols != widths[bj]:
                        raise ValueError("block size mismatch")
                    for i, row in enumerate(b.rows):
                        target = M.rows[r0 + i]
                        for j, v in row.items():
                            target[c0 + j] = v
                c0 += widths[bj]
            r0 += heights[bi]
        return M

    def copy(self) -> "QMatrix":
        return QMatrix(self.nrows, self.ncols, self.rows)

    # -- access ---------------------------------------------------------
    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i].get(j, Fraction(0))

    def __setitem__(self, ij, value):
        i, j = ij
        v = as_fraction(value)
        if v:
            self.rows[i][j] = v
        else:
            self.rows[i].pop(j, None)

    def row(self, i) -> list:
        r = self.rows[i]
        return [r.get(j, Fraction(0)) for j in range(self.ncols)]

    def column(self, j) -> list:
        return [r.get(j, Fraction(0)) for r in self.rows]

    def to_dense(self) -> list:
        return [self.row(i) for i in range(self.nrows)]

    def to_numpy(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols))
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i, j] = float(v)
        return out

    def to_json(self) -> list:
        return [[str(v) for v in self.row(i)] for i in range(self.nrows)]

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "QMatrix":
        cmap = {c: k for k, c in enumerate(cols)}
        out = QMatrix(len(rows), len(cols))
        for k, i in enumerate(rows):
            src = self.rows[i]
            dst = out.rows[k]
            if len(src) < len(cmap):
                for j, v in src.items():
                    if j in cmap:
                        dst[cmap[j]] = v
            else:
                for c, kk in cmap.items():
                    v = src.get(c)
                    if v:
                        dst[kk] = v
        return out

    # -- algebra --------------------------------------------------------
    @property
    def T(self) -> "QMatrix":
        out = QMatrix(self.ncols, self.nrows)
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out.rows[j][i] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def is_zero(self) -> bool:
        return not any(self.rows)

    def __add__(self, other: "QMatrix") -> "QMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape {self.shape} != {other.shape}")
        out = self.copy()
        for r, o in zip(out.rows, other.rows):
            for j, v in o.items():
                w = r.get(j)
                if w is None:
                    r[j] = v
                else:
                    w += v
                    if w:
                        r[j] = w
                    else:
                        del r[j]
        return out

    def __neg__(self):
        return QMatrix(self.nrows, self.ncols, [{j: -v for j, v in r.items()} for r in self.rows])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "QMatrix":
        c = as_fraction(c)
        if not c:
            return QMatrix.zeros(*self.shape)
        return QMatrix(self.nrows, self.ncols, [{j: v * c for j, v in r.items()} for r in self.rows])

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            if self.ncols != other.nrows:
                raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
            out = QMatrix(self.nrows, other.ncols)
            orows = other.rows
            for i, r in enumerate(self.rows):
                acc: dict = {}
                for k, a in r.items():
                    for j, b in orows[k].items():
                        acc[j] = acc.get(j, 0) + a * b
                out.rows[i] = {j: v for j, v in acc.items() if v}
            return out
        vec = [as_fraction(v) for v in other]
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        return [sum((a * vec[k] for k, a in r.items()), Fraction(0)) for r in self.rows]

    def is_antisymmetric(self) -> bool:
        return self.nrows == self.ncols and (self + self.T).is_zero()

    def is_symmetric(self) -> bool:
        return self.nrows == self.ncols and self == self.T

    # -- elimination ----------------------------------------------------
    def rref(self):
        """Reduced row echelon form and the list of pivot columns."""
        rows = [dict(r) for r in self.rows if r]
        pivots = []
        done = []
        for c in range(self.ncols):
            if not rows:
                break
            best = None
            for k, r in enumerate(rows):
                if c in r and (best is None or len(r) < len(rows[best])):
                    best = k
            if best is None:
                continue
            prow = rows.pop(best)
            inv = 1 / prow[c]
            prow = {j: v * inv for j, v in prow.items()}
            for group in (rows, done):
                for k, r in enumerate(group):
                    f = r.get(c)
                    if f is None:
                        continue
                    for j, v in prow.items():
                        w = r.get(j, 0) - f * v
                        if w:
                            r[j] = w
                        else:
                            r.pop(j, None)
            rows = [r for r in rows if r]
            done.append(prow)
            pivots.append(c)
        R = QMatrix(len(done), self.ncols, done)
        return R, pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> list:
        """Basis of {x : M x = 0}; each vector is 1 on one free column, 0 on the others."""
        R, pivots = self.rref()
        pivset = set(pivots)
        basis = []
        for f in range(self.ncols):
            if f in pivset:
                continue
            v = [Fraction(0)] * self.ncols
            v[f] = Fraction(1)
            for r, p in zip(R.rows, pivots):
                a = r.get(f)
                if a:
                    v[p] = -a
            basis.append(v)
        return basis

    def solve(self, rhs):
        """Particular solution of M x = rhs with free variables set to zero.

        ``rhs`` is a vector or a QMatrix (one system per column). Returns None if
        inconsistent.
        """
        matrix_rhs = isinstance(rhs, QMatrix)
        B = rhs if matrix_rhs else QMatrix.from_columns([rhs], self.nrows)
        if B.nrows != self.nrows:
            raise ValueError("rhs height mismatch")
        n = self.ncols
        aug = QMatrix(self.nrows, n + B.ncols)
        for i in range(self.nrows):
            row = dict(self.rows[i])
            for j, v in B.rows[i].items():
                row[n + j] = v
            aug.rows[i] = row
        R, pivots = aug.rref()
        if any(p >= n for p in pivots):
            return None
        X = QMatrix(n, B.ncols)
        for r, p in zip(R.rows, pivots):
            X.rows[p] = {j - n: v for j, v in r.items() if j >= n}
        return X if matrix_rhs else X.column(0)

    def inverse(self) -> "QMatrix":
        if self.nrows != self.ncols:
            raise ValueError("not square")
        X = self.solve(QMatrix.identity(self.nrows))
        if X is None or self.rank() != self.nrows:
            raise ZeroDivisionError("matrix is singular")
        return X

    def det(self) -> Fraction:
        if self.nrows != self.ncols:
            raise ValueError("not square")
        rows = [dict(r) for r in self.rows]
        n = self.nrows
        det = Fraction(1)
        for c in range(n):
            piv = None
            for k in range(c, n):
                if c in rows[k] and (piv is None or len(rows[k]) < len(rows[piv])):
                    piv = k
            if piv is None:
                return Fraction(0)
            if piv != c:
                rows[c], rows[piv] = rows[piv], rows[c]
                det = -det
            prow = rows[c]
            p = prow[c]
            det *= p
            for k in range(c + 1, n):
                f = rows[k].get(c)
                if f is None:
                    continue
                f = f / p
                r = rows[k]
                for j, v in prow.items():
                    w = r.get(j, 0) - f * v
                    if w:
                        r[j] = w
                    else:
                        r.pop(j, None)
        return det

    def __repr__(self):
        return f"QMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


def row_space_basis(vectors: Sequence[Sequence], n: int) -> QMatrix:
    """RREF basis (as rows) of the span of ``vectors`` in Q^n."""
    if not vectors:
        return QMatrix(0, n)
    R, _ = QMatrix.from_dense(vectors).rref()
    return R


def greedy_complement(kernel: Sequence[Sequence], n: int) -> list:
    """Coordinate indices, in chart order, that complete ``kernel`` to a basis of Q^n.

    A coordinate direction is taken whenever it is independent of the kernel
    plus the directions already taken.
    """
    piv_rows: dict = {}

    def reduce(vec: dict) -> dict:
        vec = dict(vec)
        for p in sorted(piv_rows):
            f = vec.get(p)
            if f:
                for j, v in piv_rows[p].items():
                    w = vec.get(j, 0) - f * v
                    if w:
                        vec[j] = w
                    else:
                        vec.pop(j, None)
        return vec

    def insert(vec: dict) -> bool:
        vec = reduce(vec)
        if not vec:
            return False
        p = min(vec)
        inv = 1 / vec[p]
        vec = {j: v * inv for j, v in vec.items()}
        for q, r in piv_rows.items():
            f = r.get(p)
            if f:
                for j, v in vec.items():
                    w = r.get(j, 0) - f * v
                    if w:
                        r[j] = w
                    else:
                        r.pop(j, None)
        piv_rows[p] = vec
        return True

    for k in kernel:
        if not insert({j: as_fraction(v) for j, v in enumerate(k) if as_fraction(v)}):
            raise ValueError("kernel vectors are linearly dependent")
    chosen = []
    for i in range(n):
        if insert({i: Fraction(1)}):
            chosen.append(i)
    return chosen


def kernel_frame(kernel: Sequence[Sequence], n: int):
    """(labels, V) for a kernel basis: ``labels`` are the coordinates left over by
    :func:`greedy_complement` and V (n x r) is the kernel basis renormalised so
    that its rows at ``labels`` form the identity."""
    horizontal = set(greedy_complement(kernel, n))
    labels = [i for i in range(n) if i not in horizontal]
    K = QMatrix.from_columns(kernel, n)
    KJ = K.submatrix(labels, range(len(kernel)))
    return labels, K @ KJ.inverse()
