"""Graver bases of integer matrices and of n-fold products.

The basis of a matrix A is the set of conformally-minimal nonzero integer
vectors in its kernel, stored as one canonical representative per antipodal
pair {g, -g} (first nonzero entry positive, sorted lexicographically).

Computation is a completion procedure over the kernel lattice: seed with an
integer kernel basis, close under sums of sign-conflicting pairs with
conformal normal-form reduction, then filter minimal elements.  The n-fold
structure is exploited two ways: small n runs the completion directly on
the product matrix, large n lifts the basis of the g-fold product (g the
Graver complexity) into all block placements, which is exact because the
number of nonzero blocks of any element never exceeds g.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from . import _backend, _kernel_py
from .errors import BudgetExceededError, KernelOverflow
from .lattice import Bimatrix, IntMatrix, IntVector, kernel_basis, nfold_product


@dataclass(frozen=True)
class Budget:
    """Resource caps for basis computations and solves.

    max_elements bounds the size of the completion working set (signed
    count, a superset of the final basis); max_seconds bounds wall time;
    max_steps bounds augmentation iterations.  Exceeding a cap raises
    BudgetExceededError or yields a budget_exceeded report, never a
    silently truncated result.
    """

    max_elements: Optional[int] = 500_000
    max_seconds: Optional[float] = None
    max_steps: Optional[int] = 100_000

    def deadline(self) -> Optional[float]:
        if self.max_seconds is None:
            return None
        return time.monotonic() + self.max_seconds


DEFAULT_BUDGET = Budget()

# nfold_graver switches from direct completion to complexity-guided block
# lifting only above this n; below it, direct completion is the cheaper path.
LIFT_MIN_N = 7

# extended_nfold_graver "auto": run the permute-and-restrict route when the
# intermediate n-fold product has at most this many columns, otherwise
# complete directly on the assembled matrix (identical output either way).
EXTENDED_AUTO_COLUMN_LIMIT = 40


class GraverBasis:
    """Finite negation-symmetric set of conformally-minimal kernel vectors,
    one canonical representative per antipodal pair."""

    __slots__ = ("ambient_dimension", "elements", "matrix_fingerprint")

    def __init__(self, ambient_dimension, elements, matrix_fingerprint=""):
        self.ambient_dimension = int(ambient_dimension)
        elems = sorted({v.canonical() for v in elements}, key=lambda v: v.entries)
        for v in elems:
            if v.dim != self.ambient_dimension:
                raise ValueError("element dimension mismatch")
        self.elements = tuple(elems)
        self.matrix_fingerprint = matrix_fingerprint

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, v: IntVector):
        c = v.canonical()
        return any(c == e for e in self.elements)

    def signed_elements(self):
        for g in self.elements:
            yield g
            yield -g

    def max_l1_norm(self) -> int:
        return max((g.l1_norm() for g in self.elements), default=0)

    def same_elements(self, other: "GraverBasis") -> bool:
        return (
            self.ambient_dimension == other.ambient_dimension
            and self.elements == other.elements
        )

    def __eq__(self, other):
        return isinstance(other, GraverBasis) and self.same_elements(other)

    def __hash__(self):
        return hash((self.ambient_dimension, self.elements))

    def __repr__(self):
        return (
            f"GraverBasis(dim={self.ambient_dimension}, pairs={len(self.elements)})"
        )


def _complete(seed_tuples, dim, budget: Budget):
    """Run the completion on whichever backend applies; exact either way."""
    deadline = budget.deadline()
    if _backend.HAVE_CKERNEL:
        try:
            return _backend.ckernel.complete_i64(
                seed_tuples, dim, budget.max_elements, deadline
            )
        except KernelOverflow:
            pass
    return _kernel_py.complete(seed_tuples, dim, budget.max_elements, deadline)


def graver_basis(M: IntMatrix, budget: Optional[Budget] = None) -> GraverBasis:
    """Graver basis of an arbitrary integer matrix.

    Returns the empty basis when the integer kernel is trivial; raises
    BudgetExceededError when caps are hit (never a partial answer).
    """
    budget = budget or DEFAULT_BUDGET
    seeds = [v.entries for v in kernel_basis(M)]
    signed = _complete(seeds, M.cols, budget)
    return GraverBasis(M.cols, (IntVector(t) for t in signed), M.fingerprint())


# ---------------------------------------------------------------------------
# n-fold products
# ---------------------------------------------------------------------------

_nfold_cache: dict = {}
_extended_cache: dict = {}
_complexity_cache: dict = {}


def clear_caches():
    _nfold_cache.clear()
    _extended_cache.clear()
    _complexity_cache.clear()


def _bimatrix_key(A: Bimatrix) -> tuple:
    return (A.A1.fingerprint(), A.A2.fingerprint(), A.r, A.s, A.t)


def graver_complexity(A: Bimatrix, budget: Optional[Budget] = None) -> int:
    """Largest number of nonzero blocks in any element of any n-fold Graver
    basis of A.

    Computed as the maximum l1-norm over the Graver basis of the matrix
    whose columns are A1*g for every signed element g of the Graver basis
    of A2; zero when A2 has trivial kernel.
    """
    budget = budget or DEFAULT_BUDGET
    key = _bimatrix_key(A)
    if key in _complexity_cache:
        return _complexity_cache[key]
    g2 = graver_basis(A.A2, budget)
    if len(g2) == 0:
        _complexity_cache[key] = 0
        return 0
    cols = []
    for g in g2.elements:
        image = A.A1.apply(g)
        cols.append(image.entries)
        cols.append((-image).entries)
    ncols = len(cols)
    entries = []
    for i in range(A.r):
        for c in cols:
            entries.append(c[i])
    M = IntMatrix(A.r, ncols, entries)
    gm = graver_basis(M, budget)
    result = gm.max_l1_norm()
    _complexity_cache[key] = result
    return result


def _lift_blocks(base: GraverBasis, t: int, m: int, n: int, fingerprint: str) -> GraverBasis:
    """Place the nonzero blocks of every m-fold element into all n-block
    positions (order preserved, zero blocks elsewhere)."""
    compressed = set()
    for g in base.elements:
        blocks = tuple(g.entries[k * t : (k + 1) * t] for k in range(m))
        nz = tuple(b for b in blocks if any(b))
        compressed.add(nz)
    out = set()
    zero_block = (0,) * t
    for nz in compressed:
        k = len(nz)
        for positions in combinations(range(n), k):
            blocks = [zero_block] * n
            for pos, blk in zip(positions, nz):
                blocks[pos] = blk
            flat = tuple(v for blk in blocks for v in blk)
            out.add(IntVector(flat).canonical())
    return GraverBasis(n * t, out, fingerprint)


def nfold_graver(
    A: Bimatrix,
    n: int,
    budget: Optional[Budget] = None,
    strategy: str = "auto",
    use_cache: bool = True,
) -> GraverBasis:
    """Graver basis of the n-fold product of A.

    strategy "direct" completes on the assembled product, "lift" builds the
    basis of the g(A)-fold product and lifts block placements, "auto" picks
    by n.  All strategies return the identical basis.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    budget = budget or DEFAULT_BUDGET
    key = (_bimatrix_key(A), n)
    if use_cache and key in _nfold_cache:
        return _nfold_cache[key]

    result = None
    if strategy not in ("auto", "direct", "lift"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "direct" or (strategy == "auto" and n < LIFT_MIN_N):
        result = graver_basis(nfold_product(A, n), budget)
    else:
        g = graver_complexity(A, budget)
        if g == 0:
            result = GraverBasis(
                n * A.t, (), nfold_product(A, n).fingerprint()
            )
        elif n <= g:
            result = graver_basis(nfold_product(A, n), budget)
        else:
            base = graver_basis(nfold_product(A, g), budget)
            result = _lift_blocks(
                base, A.t, g, n, nfold_product(A, n).fingerprint()
            )
    if use_cache:
        _nfold_cache[key] = result
    return result


# ---------------------------------------------------------------------------
# Extended construction: basis of ((A^(n), 0), (W^(n), I))
# ---------------------------------------------------------------------------

def assemble_extended_matrix(A: Bimatrix, W: Bimatrix, n: int) -> IntMatrix:
    """The (r+ns+p+nq) x (nt+p+nq) block matrix with A's n-fold product over
    W's n-fold product, and an identity next to the W rows."""
    if A.t != W.t:
        raise ValueError("A and W must share their column count")
    An = nfold_product(A, n)
    Wn = nfold_product(W, n)
    slack = W.r + n * W.s
    rows = []
    for i in range(An.rows):
        rows.append(list(An.row(i)) + [0] * slack)
    for i in range(Wn.rows):
        unit = [0] * slack
        unit[i] = 1
        rows.append(list(Wn.row(i)) + unit)
    return IntMatrix.from_rows(rows) if rows else IntMatrix.zeros(0, An.cols + slack)


def _extended_bimatrix(A: Bimatrix, W: Bimatrix) -> Bimatrix:
    """Single bimatrix whose n-fold product carries both A and W plus the
    per-block slack columns; column layout per block is (x, y, z)."""
    r, s, t = A.r, A.s, A.t
    p, q = W.r, W.s
    width = t + p + q
    d1_rows = []
    for i in range(r):
        d1_rows.append(list(A.A1.row(i)) + [0] * (p + q))
    for i in range(p):
        unit = [0] * p
        unit[i] = 1
        d1_rows.append(list(W.A1.row(i)) + unit + [0] * q)
    d2_rows = []
    for i in range(s):
        d2_rows.append(list(A.A2.row(i)) + [0] * (p + q))
    for i in range(q):
        unit = [0] * q
        unit[i] = 1
        d2_rows.append(list(W.A2.row(i)) + [0] * p + unit)
    return Bimatrix.from_rows(d1_rows, d2_rows, t=width)


def extended_nfold_graver(
    A: Bimatrix,
    W: Bimatrix,
    n: int,
    budget: Optional[Budget] = None,
    strategy: str = "lemma",
    use_cache: bool = True,
) -> GraverBasis:
    """Graver basis of the assembled extended matrix.

    strategy "lemma" goes through the n-fold product of the combined
    bimatrix, reorders coordinates into (x-blocks, y-blocks, z-blocks), and
    keeps exactly the elements whose second..n-th y-blocks vanish (dropping
    those zero coordinates).  strategy "direct" completes on the assembled
    matrix itself.  Both produce the same basis; "auto" picks by size.
    """
    if A.t != W.t:
        raise ValueError("A and W must share their column count")
    if n < 1:
        raise ValueError("n must be >= 1")
    budget = budget or DEFAULT_BUDGET
    t, p, q = A.t, W.r, W.s
    if strategy == "auto":
        strategy = "lemma" if n * (t + p + q) <= EXTENDED_AUTO_COLUMN_LIMIT else "direct"
    if strategy not in ("lemma", "direct"):
        raise ValueError(f"unknown strategy {strategy!r}")

    B = assemble_extended_matrix(A, W, n)
    key = (B.fingerprint(), strategy)
    if use_cache and key in _extended_cache:
        return _extended_cache[key]

    if strategy == "direct":
        result = graver_basis(B, budget)
    else:
        D = _extended_bimatrix(A, W)
        gd = nfold_graver(D, n, budget, strategy="auto", use_cache=use_cache)
        width = t + p + q
        kept = []
        for v in gd.elements:
            e = v.entries
            xs = []
            ys = []
            zs = []
            ok = True
            for k in range(n):
                base = k * width
                xs.extend(e[base : base + t])
                yk = e[base + t : base + t + p]
                if k == 0:
                    ys.extend(yk)
                elif any(yk):
                    ok = False
                    break
                zs.extend(e[base + t + p : base + width])
            if ok:
                kept.append(IntVector(tuple(xs) + tuple(ys) + tuple(zs)))
        result = GraverBasis(n * t + p + n * q, kept, B.fingerprint())
    if use_cache:
        _extended_cache[key] = result
    return result
