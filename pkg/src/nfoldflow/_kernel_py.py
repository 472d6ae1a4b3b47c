"""Pure-Python implementations of the two hot kernels.

These are the reference implementations; `_ckernel` (Cython) mirrors them
exactly over overflow-checked int64 and is preferred at import time when
available.  Both must produce identical results: the completion output is
the unique minimal set, so agreement is a real invariant, not luck.

Vectors are plain tuples of ints.  Sign-support bitmasks are Python ints,
which keeps the conformal-domination prefilter cheap at any dimension.
"""

from __future__ import annotations

import heapq
import time

from .errors import BudgetExceededError


def _masks(v):
    """(positive-support bits, negative-support bits) of tuple v."""
    pos = neg = 0
    bit = 1
    for a in v:
        if a > 0:
            pos |= bit
        elif a < 0:
            neg |= bit
        bit <<= 1
    return pos, neg


class _PotSet:
    """Completion working set: vectors plus masks and norms, with a
    norm-sorted scan order so domination queries can stop early."""

    def __init__(self):
        self.vecs = []
        self.pos = []
        self.neg = []
        self.norm = []
        self.by_norm = []  # indices sorted by (norm, index)

    def __len__(self):
        return len(self.vecs)

    def add(self, v, norm):
        idx = len(self.vecs)
        pos, neg = _masks(v)
        self.vecs.append(v)
        self.pos.append(pos)
        self.neg.append(neg)
        self.norm.append(norm)
        lo, hi = 0, len(self.by_norm)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.norm[self.by_norm[mid]] <= norm:
                lo = mid + 1
            else:
                hi = mid
        self.by_norm.insert(lo, idx)
        return idx

    def find_reducer(self, v, vpos, vneg, vnorm, skip=-1):
        """Index of the first element (in norm order) conformally below v,
        or -1.  Mask subset tests prefilter the entrywise check."""
        vecs, pos, neg, norm = self.vecs, self.pos, self.neg, self.norm
        npos = ~vpos
        nneg = ~vneg
        for idx in self.by_norm:
            if norm[idx] > vnorm:
                return -1
            if idx == skip or (pos[idx] & npos) or (neg[idx] & nneg):
                continue
            h = vecs[idx]
            ok = True
            for a, b in zip(h, v):
                if a > 0:
                    if b < a:
                        ok = False
                        break
                elif a < 0:
                    if b > a:
                        ok = False
                        break
            if ok:
                return idx
        return -1

    def normal_form(self, v):
        """Exhaustive conformal reduction of v, subtracting the largest
        conformal multiple of each reducer found."""
        norm = sum(abs(a) for a in v)
        while norm:
            pos, neg = _masks(v)
            idx = self.find_reducer(v, pos, neg, norm)
            if idx < 0:
                break
            h = self.vecs[idx]
            k = min(b // a for a, b in zip(h, v) if a)
            v = tuple(b - k * a for a, b in zip(h, v))
            norm = sum(abs(a) for a in v)
        return v, norm


def complete(seeds, dim, max_elements=None, deadline=None):
    """Pottier-style completion: from a lattice generating set to the full
    sign-closed set of conformally-minimal nonzero lattice vectors.

    Seeds the set with +/- each generator, then drains a norm-ordered queue
    of representatives, pairing each against all previously drained ones
    (f+g and f-g cover all sign combinations), normal-forming every
    sign-conflicting sum, and inserting surviving vectors with both signs.
    Finally filters out dominated elements.  Returns a list of tuples
    containing both g and -g for every survivor.
    """
    if dim == 0:
        return []
    G = _PotSet()
    pending = []   # heap of (norm, rep index)
    popped = []    # rep indices already drained, in pop order

    def try_add(v):
        v, norm = G.normal_form(v)
        if norm == 0:
            return
        if max_elements is not None and len(G) + 2 > max_elements:
            raise BudgetExceededError(
                f"completion exceeded element cap {max_elements}"
            )
        idx = G.add(v, norm)
        G.add(tuple(-a for a in v), norm)
        heapq.heappush(pending, (norm, idx))

    for s in seeds:
        try_add(tuple(s))

    checked = 0
    while pending:
        _, fi = heapq.heappop(pending)
        f = G.vecs[fi]
        fpos, fneg = G.pos[fi], G.neg[fi]
        popped.append(fi)
        for gj in popped:
            gpos, gneg = G.pos[gj], G.neg[gj]
            g = G.vecs[gj]
            # f+g unless conformal (conformal sums reduce trivially)
            if (fpos & gneg) or (fneg & gpos):
                try_add(tuple(a + b for a, b in zip(f, g)))
            # f-g unless f,-g conformal
            if (fpos & gpos) or (fneg & gneg):
                try_add(tuple(a - b for a, b in zip(f, g)))
            checked += 1
            if deadline is not None and checked % 256 == 0:
                if time.monotonic() > deadline:
                    raise BudgetExceededError("completion exceeded time budget")
    return _minimal_filter(G)


def _minimal_filter(G):
    """Keep only elements not conformally dominated by a different one."""
    out = []
    for i, v in enumerate(G.vecs):
        if G.find_reducer(v, G.pos[i], G.neg[i], G.norm[i], skip=i) < 0:
            out.append(v)
    return out


# ---------------------------------------------------------------------------
# Helpers for the augmentation step (pure path).
# ---------------------------------------------------------------------------

def max_step(x, g, lower, upper):
    """Largest integer a >= 0 with lower <= x + a*g <= upper, or None if
    unbounded.  Bounds entries may be None for -/+ infinity."""
    best = None
    for i, gi in enumerate(g):
        if gi > 0:
            ui = upper[i]
            if ui is None:
                continue
            room = (ui - x[i]) // gi
        elif gi < 0:
            li = lower[i]
            if li is None:
                continue
            room = (x[i] - li) // (-gi)
        else:
            continue
        if best is None or room < best:
            best = room
            if best <= 0:
                return best
    return best


def argmin_convex(phi, hi):
    """Leftmost integer minimizer of convex phi on [0, hi] (hi >= 0).

    Uses only comparisons of phi values, never derivatives.
    """
    lo = 0
    while lo < hi:
        mid = (lo + hi) // 2
        if phi(mid) <= phi(mid + 1):
            hi = mid
        else:
            lo = mid + 1
    return lo
