"""Exact integer linear algebra: vectors, matrices, bimatrices, digraphs.

Everything here is arbitrary-precision (plain Python ints) and immutable
after construction, so values can be shared freely across threads and used
as dict keys.  The module also provides the two block-product constructions
used throughout the package (the n-fold product of a bimatrix and the
special product built from an identity top block), the conformal partial
order on integer vectors, signed vertex-edge incidence matrices, and an
integer kernel/solver based on column-style Hermite elimination.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Optional, Sequence


class DimensionError(ValueError):
    """Operands have incompatible dimensions."""


class IntVector:
    """Immutable vector of arbitrary-precision integers."""

    __slots__ = ("_e",)

    def __init__(self, entries: Iterable[int]):
        e = tuple(int(v) for v in entries)
        self._e = e

    @property
    def entries(self) -> tuple:
        return self._e

    @classmethod
    def zero(cls, dim: int) -> "IntVector":
        return cls((0,) * dim)

    @classmethod
    def unit(cls, dim: int, index: int) -> "IntVector":
        e = [0] * dim
        e[index] = 1
        return cls(e)

    def __len__(self) -> int:
        return len(self._e)

    @property
    def dim(self) -> int:
        return len(self._e)

    def __getitem__(self, i):
        return self._e[i]

    def __iter__(self):
        return iter(self._e)

    def __add__(self, other: "IntVector") -> "IntVector":
        self._check_dim(other)
        return IntVector(a + b for a, b in zip(self._e, other._e))

    def __sub__(self, other: "IntVector") -> "IntVector":
        self._check_dim(other)
        return IntVector(a - b for a, b in zip(self._e, other._e))

    def __neg__(self) -> "IntVector":
        return IntVector(-a for a in self._e)

    def scale(self, k: int) -> "IntVector":
        return IntVector(k * a for a in self._e)

    def dot(self, other: "IntVector") -> int:
        self._check_dim(other)
        return sum(a * b for a, b in zip(self._e, other._e))

    def l1_norm(self) -> int:
        return sum(abs(a) for a in self._e)

    def linf_norm(self) -> int:
        return max((abs(a) for a in self._e), default=0)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self._e)

    def concat(self, other: "IntVector") -> "IntVector":
        return IntVector(self._e + other._e)

    def canonical(self) -> "IntVector":
        """The representative of {v, -v} whose first nonzero entry is positive."""
        for a in self._e:
            if a > 0:
                return self
            if a < 0:
                return -self
        return self

    def _check_dim(self, other: "IntVector"):
        if len(self._e) != len(other._e):
            raise DimensionError(
                f"dimension mismatch: {len(self._e)} vs {len(other._e)}"
            )

    def __eq__(self, other):
        return isinstance(other, IntVector) and self._e == other._e

    def __hash__(self):
        return hash(self._e)

    def __repr__(self):
        return f"IntVector({list(self._e)!r})"


class IntMatrix:
    """Immutable row-major matrix of arbitrary-precision integers."""

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, rows: int, cols: int, entries: Iterable[int]):
        self.rows = int(rows)
        self.cols = int(cols)
        e = tuple(int(v) for v in entries)
        if len(e) != self.rows * self.cols:
            raise DimensionError(
                f"need {self.rows * self.cols} entries, got {len(e)}"
            )
        self._e = e

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        flat = []
        for r in rows:
            if len(r) != ncols:
                raise DimensionError("ragged rows")
            flat.extend(r)
        return cls(nrows, ncols, flat)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        e = [0] * (n * n)
        for i in range(n):
            e[i * n + i] = 1
        return cls(n, n, e)

    @property
    def entries(self) -> tuple:
        return self._e

    def entry(self, i: int, j: int) -> int:
        return self._e[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self._e[i * self.cols : (i + 1) * self.cols]

    def column(self, j: int) -> tuple:
        return self._e[j :: self.cols] if self.cols else ()

    def row_list(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def apply(self, v: IntVector) -> IntVector:
        """Matrix-vector product."""
        if v.dim != self.cols:
            raise DimensionError(f"matrix has {self.cols} cols, vector dim {v.dim}")
        e = self._e
        c = self.cols
        ve = v.entries
        out = []
        for i in range(self.rows):
            base = i * c
            out.append(sum(e[base + j] * ve[j] for j in range(c)))
        return IntVector(out)

    def stack(self, other: "IntMatrix") -> "IntMatrix":
        """Rows of self on top of rows of other."""
        if self.cols != other.cols:
            raise DimensionError("column count mismatch in stack")
        return IntMatrix(self.rows + other.rows, self.cols, self._e + other._e)

    def fingerprint(self) -> str:
        """Stable content hash, used to key Graver-basis caches."""
        h = hashlib.sha256()
        h.update(f"{self.rows}x{self.cols}:".encode())
        h.update(",".join(map(str, self._e)).encode())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        return (
            isinstance(other, IntMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._e == other._e
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self._e))

    def __repr__(self):
        return f"IntMatrix.from_rows({self.row_list()!r})"


class Bimatrix:
    """A matrix split into a top block A1 (r x t) and bottom block A2 (s x t).

    Either block may have zero rows.
    """

    __slots__ = ("r", "s", "t", "A1", "A2")

    def __init__(self, A1: IntMatrix, A2: IntMatrix):
        if A1.cols != A2.cols:
            raise DimensionError(
                f"blocks must share column count: {A1.cols} vs {A2.cols}"
            )
        self.A1 = A1
        self.A2 = A2
        self.r = A1.rows
        self.s = A2.rows
        self.t = A1.cols

    @classmethod
    def from_rows(cls, a1_rows: Sequence[Sequence[int]], a2_rows: Sequence[Sequence[int]],
                  t: Optional[int] = None) -> "Bimatrix":
        """Build from row lists; `t` disambiguates when a block has no rows."""
        if t is None:
            if a1_rows:
                t = len(a1_rows[0])
            elif a2_rows:
                t = len(a2_rows[0])
            else:
                raise DimensionError("cannot infer column count of an empty bimatrix")
        a1 = IntMatrix.from_rows(a1_rows) if a1_rows else IntMatrix.zeros(0, t)
        a2 = IntMatrix.from_rows(a2_rows) if a2_rows else IntMatrix.zeros(0, t)
        return cls(a1, a2)

    def stacked(self) -> IntMatrix:
        """The plain (r+s) x t matrix with A1 over A2."""
        return self.A1.stack(self.A2)

    def __eq__(self, other):
        return (
            isinstance(other, Bimatrix)
            and self.A1 == other.A1
            and self.A2 == other.A2
        )

    def __hash__(self):
        return hash((self.A1, self.A2))

    def __repr__(self):
        return f"Bimatrix({self.A1!r}, {self.A2!r})"


class Digraph:
    """Directed graph with 1-based vertices and an ordered edge list.

    The edge order is significant: edge k owns column k of the incidence
    matrix and coordinate k of every flow vector.  Parallel edges are
    allowed, self-loops are not.
    """

    __slots__ = ("vertex_count", "edges")

    def __init__(self, vertex_count: int, edges: Sequence[tuple]):
        self.vertex_count = int(vertex_count)
        es = []
        for tail, head in edges:
            tail, head = int(tail), int(head)
            if tail == head:
                raise ValueError(f"self-loop at vertex {tail}")
            if not (1 <= tail <= self.vertex_count and 1 <= head <= self.vertex_count):
                raise ValueError(f"edge ({tail},{head}) outside 1..{self.vertex_count}")
            es.append((tail, head))
        self.edges = tuple(es)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @classmethod
    def complete_bipartite(cls, m: int, n: int) -> "Digraph":
        """K_{m,n} oriented from the m left vertices to the n right ones.

        Edges are ordered (i,j) row-major; left vertex i is vertex i, right
        vertex j is vertex m+j.
        """
        edges = [(i, m + j) for i in range(1, m + 1) for j in range(1, n + 1)]
        return cls(m + n, edges)

    def __eq__(self, other):
        return (
            isinstance(other, Digraph)
            and self.vertex_count == other.vertex_count
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.vertex_count, self.edges))

    def __repr__(self):
        return f"Digraph({self.vertex_count}, {list(self.edges)!r})"


def conformal_leq(x: IntVector, y: IntVector) -> bool:
    """True iff x and y lie in the same orthant and |x_i| <= |y_i| for all i."""
    if x.dim != y.dim:
        raise DimensionError(f"dimension mismatch: {x.dim} vs {y.dim}")
    for a, b in zip(x.entries, y.entries):
        if a * b < 0 or abs(a) > abs(b):
            return False
    return True


def nfold_product(A: Bimatrix, n: int) -> IntMatrix:
    """The (r+ns) x nt matrix with A1 repeated along the top row of blocks
    and A2 on the block diagonal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r, s, t = A.r, A.s, A.t
    rows = r + n * s
    cols = n * t
    e = [0] * (rows * cols)
    a1, a2 = A.A1.entries, A.A2.entries
    for i in range(r):
        for k in range(n):
            base = i * cols + k * t
            src = i * t
            e[base : base + t] = a1[src : src + t]
    for k in range(n):
        for i in range(s):
            base = (r + k * s + i) * cols + k * t
            src = i * t
            e[base : base + t] = a2[src : src + t]
    return IntMatrix(rows, cols, e)


def special_product(D: IntMatrix, n: int) -> IntMatrix:
    """n-fold product of the bimatrix (I_t; D): a (t+ns) x nt matrix."""
    return nfold_product(Bimatrix(IntMatrix.identity(D.cols), D), n)


def incidence_matrix(G: Digraph) -> IntMatrix:
    """Signed vertex-edge incidence matrix: column e is +1 at the head of e
    and -1 at its tail, so that (Dx)_v is the net inflow at vertex v."""
    s, t = G.vertex_count, G.edge_count
    e = [0] * (s * t)
    for j, (tail, head) in enumerate(G.edges):
        e[(tail - 1) * t + j] = -1
        e[(head - 1) * t + j] = 1
    return IntMatrix(s, t, e)


# ---------------------------------------------------------------------------
# Integer kernel and integer linear solve via column Hermite elimination.
# ---------------------------------------------------------------------------

def _column_echelon(M: IntMatrix):
    """Unimodular column reduction M*U = H with H in column echelon form.

    Returns (H_cols, U_cols, pivots) where H_cols/U_cols are lists of
    columns (as lists) and pivots is a list of (row, col) positions.  The
    columns of U beyond the last pivot column form a lattice basis of the
    integer kernel of M.
    """
    m, d = M.rows, M.cols
    # Work on columns: a[j] is column j of the evolving H, u[j] of U.
    a = [list(M.column(j)) for j in range(d)]
    u = [[1 if i == j else 0 for i in range(d)] for j in range(d)]
    pivots = []
    c = 0
    for r in range(m):
        if c >= d:
            break
        # Reduce row r across columns c..d-1 to a single nonzero entry.
        while True:
            nz = [j for j in range(c, d) if a[j][r] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda j: abs(a[j][r]))
            j1 = nz[0]
            for j2 in nz[1:]:
                q = a[j2][r] // a[j1][r]
                if q:
                    col1, col2 = a[j1], a[j2]
                    for i in range(m):
                        col2[i] -= q * col1[i]
                    ucol1, ucol2 = u[j1], u[j2]
                    for i in range(d):
                        ucol2[i] -= q * ucol1[i]
        nz = [j for j in range(c, d) if a[j][r] != 0]
        if not nz:
            continue
        j = nz[0]
        a[c], a[j] = a[j], a[c]
        u[c], u[j] = u[j], u[c]
        if a[c][r] < 0:
            a[c] = [-v for v in a[c]]
            u[c] = [-v for v in u[c]]
        pivots.append((r, c))
        c += 1
    return a, u, pivots


def kernel_basis(M: IntMatrix) -> list:
    """Lattice basis of {x integer : M x = 0} (may be empty)."""
    _, u, pivots = _column_echelon(M)
    first_free = len(pivots)
    return [IntVector(u[j]) for j in range(first_free, M.cols)]


def solve_integer(M: IntMatrix, b: IntVector) -> Optional[IntVector]:
    """One integer solution of M x = b, or None when none exists."""
    if b.dim != M.rows:
        raise DimensionError(f"rhs dim {b.dim}, matrix rows {M.rows}")
    h, u, pivots = _column_echelon(M)
    d = M.cols
    y = [0] * d
    pivot_rows = {r: c for r, c in pivots}
    for r, c in pivots:
        val = b[r] - sum(h[cc][r] * y[cc] for _, cc in pivots if cc < c)
        piv = h[c][r]
        if val % piv != 0:
            return None
        y[c] = val // piv
    # Rows without a pivot must be consistent.
    for r in range(M.rows):
        if r in pivot_rows:
            continue
        val = sum(h[c][r] * y[c] for _, c in pivots)
        if val != b[r]:
            return None
    x = [sum(u[j][i] * y[j] for j in range(d)) for i in range(d)]
    return IntVector(x)
