# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fast paths for the two hot loops: lattice completion and the
steepest augmentation step.

Mirrors `_kernel_py` exactly, over int64 with explicit overflow guards.
Any value that could leave the guarded range raises KernelOverflow and the
caller re-runs the computation on the pure-Python big-int path, so results
are always exact regardless of magnitude.
"""

import heapq
import time

from libc.stdlib cimport free, malloc, realloc
from libc.string cimport memmove
from libc.stdint cimport int64_t, uint64_t, int8_t, uint8_t, int32_t

from .errors import BudgetExceededError, KernelOverflow

DEF MAXWORDS = 8            # supports dimension <= 512
cdef int64_t OVF = <int64_t>1 << 60
cdef int64_t HUGE = <int64_t>1 << 62


cdef inline int64_t iabs64(int64_t a) nogil:
    return -a if a < 0 else a


# ---------------------------------------------------------------------------
# Completion working set
# ---------------------------------------------------------------------------
#
# Elements live in flat arrays; conformal-domination lookups go through
# per-(coordinate, sign) buckets: every element is filed under exactly one
# of its support coordinates (the currently least-loaded, for balance), and
# each bucket stays sorted by norm so scans stop early.  A reducer h of v
# satisfies supp(h) subseteq supp(v) with matching signs, so scanning the
# buckets of v's own support coordinates finds it.

cdef struct PotSet:
    int64_t* vecs       # count * dim
    uint64_t* masks     # count * 2*nwords (pos words, then neg words)
    int64_t* norms
    int32_t** bucket    # 2*dim bucket arrays: index 2*i+(0 pos / 1 neg)
    int32_t* blen
    int32_t* bcap
    int count
    int cap
    int dim
    int nwords


cdef int _grow(PotSet* S) except -1:
    cdef int newcap = 1024 if S.cap == 0 else S.cap * 2
    S.vecs = <int64_t*>realloc(S.vecs, <size_t>newcap * S.dim * sizeof(int64_t))
    S.masks = <uint64_t*>realloc(S.masks, <size_t>newcap * 2 * S.nwords * sizeof(uint64_t))
    S.norms = <int64_t*>realloc(S.norms, <size_t>newcap * sizeof(int64_t))
    if S.vecs == NULL or S.masks == NULL or S.norms == NULL:
        raise MemoryError()
    S.cap = newcap
    return 0


cdef int _init_set(PotSet* S, int dim, int nwords) except -1:
    cdef int i
    S.vecs = NULL; S.masks = NULL; S.norms = NULL
    S.count = 0; S.cap = 0; S.dim = dim; S.nwords = nwords
    S.bucket = <int32_t**>malloc(<size_t>2 * dim * sizeof(int32_t*))
    S.blen = <int32_t*>malloc(<size_t>2 * dim * sizeof(int32_t))
    S.bcap = <int32_t*>malloc(<size_t>2 * dim * sizeof(int32_t))
    if S.bucket == NULL or S.blen == NULL or S.bcap == NULL:
        raise MemoryError()
    for i in range(2 * dim):
        S.bucket[i] = NULL
        S.blen[i] = 0
        S.bcap[i] = 0
    return 0


cdef void _free_set(PotSet* S):
    cdef int i
    if S.bucket != NULL:
        for i in range(2 * S.dim):
            free(S.bucket[i])
    free(S.bucket); free(S.blen); free(S.bcap)
    free(S.vecs); free(S.masks); free(S.norms)


cdef void _fill_masks(int64_t* v, int dim, int nwords, uint64_t* out) nogil:
    cdef int w, i
    for w in range(2 * nwords):
        out[w] = 0
    for i in range(dim):
        if v[i] > 0:
            out[i >> 6] |= (<uint64_t>1) << (i & 63)
        elif v[i] < 0:
            out[nwords + (i >> 6)] |= (<uint64_t>1) << (i & 63)


cdef int64_t _scan_steps = 0
cdef int64_t _nf_calls = 0
cdef int64_t _nf_steps = 0
cdef int64_t _pairs_seen = 0
cdef int64_t _sums_formed = 0


cdef int _find_reducer(PotSet* S, int64_t* v, uint64_t* vnot, int64_t vnorm,
                       int skip) nogil:
    """Index of some element conformally below v, or -1.

    vnot holds the complements of v's sign-support masks.  Scans only the
    buckets of v's support coordinates; within a bucket, norms ascend.
    """
    global _scan_steps
    cdef int i, bi, pos, idx, w, nwords = S.nwords, dim = S.dim
    cdef int32_t* b
    cdef int32_t n
    cdef uint64_t* hm
    cdef int64_t* h
    cdef bint ok
    for i in range(dim):
        if v[i] > 0:
            bi = 2 * i
        elif v[i] < 0:
            bi = 2 * i + 1
        else:
            continue
        b = S.bucket[bi]
        n = S.blen[bi]
        for pos in range(n):
            idx = b[pos]
            _scan_steps += 1
            if S.norms[idx] > vnorm:
                break
            if idx == skip:
                continue
            hm = S.masks + <size_t>idx * 2 * nwords
            ok = True
            for w in range(2 * nwords):
                if hm[w] & vnot[w]:
                    ok = False
                    break
            if not ok:
                continue
            h = S.vecs + <size_t>idx * dim
            ok = True
            for w in range(dim):
                if h[w] > 0:
                    if v[w] < h[w]:
                        ok = False
                        break
                elif h[w] < 0:
                    if v[w] > h[w]:
                        ok = False
                        break
            if ok:
                return idx
    return -1


cdef int64_t _normal_form(PotSet* S, int64_t* v) nogil:
    """Exhaustive conformal reduction of v in place (largest conformal
    multiple of each reducer); returns the resulting norm."""
    global _nf_calls, _nf_steps
    cdef uint64_t vm[2 * MAXWORDS]
    cdef uint64_t vnot[2 * MAXWORDS]
    cdef int64_t vnorm, k, q
    cdef int idx, i, w, dim = S.dim, nwords = S.nwords
    cdef int64_t* h
    _nf_calls += 1
    while True:
        _nf_steps += 1
        vnorm = 0
        for i in range(dim):
            vnorm += iabs64(v[i])
        if vnorm == 0:
            return 0
        _fill_masks(v, dim, nwords, vm)
        for w in range(2 * nwords):
            vnot[w] = ~vm[w]
        idx = _find_reducer(S, v, vnot, vnorm, -1)
        if idx < 0:
            return vnorm
        h = S.vecs + <size_t>idx * dim
        k = HUGE
        for i in range(dim):
            if h[i] != 0:
                q = v[i] // h[i]
                if q < k:
                    k = q
        for i in range(dim):
            v[i] -= k * h[i]


cdef int _insert(PotSet* S, int64_t* v, int64_t norm) except -1:
    """Append v; file it in its least-loaded support bucket (norm-sorted)."""
    cdef int idx, i, bi, best_bi, lo, hi, mid
    cdef int32_t* b
    if S.count == S.cap:
        _grow(S)
    idx = S.count
    S.count += 1
    for i in range(S.dim):
        S.vecs[<size_t>idx * S.dim + i] = v[i]
    _fill_masks(v, S.dim, S.nwords, S.masks + <size_t>idx * 2 * S.nwords)
    S.norms[idx] = norm
    best_bi = -1
    for i in range(S.dim):
        if v[i] > 0:
            bi = 2 * i
        elif v[i] < 0:
            bi = 2 * i + 1
        else:
            continue
        if best_bi < 0 or S.blen[bi] < S.blen[best_bi]:
            best_bi = bi
    if S.blen[best_bi] == S.bcap[best_bi]:
        S.bcap[best_bi] = 64 if S.bcap[best_bi] == 0 else S.bcap[best_bi] * 2
        S.bucket[best_bi] = <int32_t*>realloc(
            S.bucket[best_bi], <size_t>S.bcap[best_bi] * sizeof(int32_t))
        if S.bucket[best_bi] == NULL:
            raise MemoryError()
    b = S.bucket[best_bi]
    lo = 0
    hi = S.blen[best_bi]
    while lo < hi:
        mid = (lo + hi) >> 1
        if S.norms[b[mid]] <= norm:
            lo = mid + 1
        else:
            hi = mid
    memmove(b + lo + 1, b + lo, <size_t>(S.blen[best_bi] - lo) * sizeof(int32_t))
    b[lo] = idx
    S.blen[best_bi] += 1
    return idx


cdef int _try_add(PotSet* S, int64_t* work, list pending,
                  int64_t cap_elems) except -1:
    """Normal-form the candidate in `work`; insert both signs if nonzero.

    A nonzero normal form can never equal an existing element (it would
    have reduced to zero), so no dedup lookup is needed.
    """
    cdef int64_t norm = _normal_form(S, work)
    cdef int idx, k
    if norm == 0:
        return 0
    if cap_elems >= 0 and S.count + 2 > cap_elems:
        raise BudgetExceededError(
            f"completion exceeded element cap {cap_elems}")
    idx = _insert(S, work, norm)
    for k in range(S.dim):
        work[k] = -work[k]
    _insert(S, work, norm)
    heapq.heappush(pending, (norm, idx))
    return 0


def kernel_stats():
    """Counters accumulated across complete_i64 runs (profiling aid)."""
    return {
        "scan_steps": _scan_steps,
        "nf_calls": _nf_calls,
        "nf_steps": _nf_steps,
        "pairs_seen": _pairs_seen,
        "sums_formed": _sums_formed,
    }


def complete_i64(seeds, int dim, max_elements=None, deadline=None):
    """int64 twin of `_kernel_py.complete`; raises KernelOverflow when any
    intermediate entry could leave the guarded range."""
    global _pairs_seen, _sums_formed
    if dim == 0:
        return []
    cdef int nwords = (dim + 63) >> 6
    if nwords > MAXWORDS:
        raise KernelOverflow(f"dimension {dim} beyond fast-path limit")
    cdef PotSet S
    _init_set(&S, dim, nwords)

    cdef int64_t cap_elems = <int64_t>max_elements if max_elements is not None else -1
    cdef double dl = deadline if deadline is not None else -1.0

    cdef int64_t* work = <int64_t*>malloc(<size_t>dim * sizeof(int64_t))
    cdef int64_t* fbuf = <int64_t*>malloc(<size_t>dim * sizeof(int64_t))
    cdef int32_t* popped = NULL
    cdef int npopped = 0, cap_popped = 0
    if work == NULL or fbuf == NULL:
        free(work); free(fbuf)
        _free_set(&S)
        raise MemoryError()

    pending = []
    cdef int64_t a
    cdef int i, fi, gj, pi, w
    cdef uint64_t fpos[MAXWORDS]
    cdef uint64_t fneg[MAXWORDS]
    cdef uint64_t* gm
    cdef int64_t* gv
    cdef bint skip_sum, skip_diff
    cdef long checked = 0

    try:
        for s in seeds:
            for i in range(dim):
                entry = s[i]
                if entry > OVF or entry < -OVF:
                    raise KernelOverflow("seed magnitude beyond fast path")
                work[i] = <int64_t>entry
            _try_add(&S, work, pending, cap_elems)
        while pending:
            _, fi = heapq.heappop(pending)
            if npopped == cap_popped:
                cap_popped = 1024 if cap_popped == 0 else cap_popped * 2
                popped = <int32_t*>realloc(popped, <size_t>cap_popped * sizeof(int32_t))
                if popped == NULL:
                    raise MemoryError()
            popped[npopped] = fi
            npopped += 1
            for i in range(dim):
                fbuf[i] = S.vecs[<size_t>fi * dim + i]
            gm = S.masks + <size_t>fi * 2 * nwords
            for w in range(nwords):
                fpos[w] = gm[w]
                fneg[w] = gm[nwords + w]
            for pi in range(npopped):
                gj = popped[pi]
                gm = S.masks + <size_t>gj * 2 * nwords
                skip_sum = True
                skip_diff = True
                for w in range(nwords):
                    if (fpos[w] & gm[nwords + w]) or (fneg[w] & gm[w]):
                        skip_sum = False
                        break
                for w in range(nwords):
                    if (fpos[w] & gm[w]) or (fneg[w] & gm[nwords + w]):
                        skip_diff = False
                        break
                _pairs_seen += 1
                if not skip_sum:
                    _sums_formed += 1
                    gv = S.vecs + <size_t>gj * dim
                    for i in range(dim):
                        a = fbuf[i] + gv[i]
                        if a > OVF or a < -OVF:
                            raise KernelOverflow("sum magnitude beyond fast path")
                        work[i] = a
                    _try_add(&S, work, pending, cap_elems)
                if not skip_diff:
                    _sums_formed += 1
                    gv = S.vecs + <size_t>gj * dim
                    for i in range(dim):
                        a = fbuf[i] - gv[i]
                        if a > OVF or a < -OVF:
                            raise KernelOverflow("sum magnitude beyond fast path")
                        work[i] = a
                    _try_add(&S, work, pending, cap_elems)
                checked += 1
                if dl >= 0.0 and (checked & 1023) == 0:
                    if time.monotonic() > dl:
                        raise BudgetExceededError("completion exceeded time budget")
        return _minimal_list(&S)
    finally:
        free(work)
        free(fbuf)
        free(popped)
        _free_set(&S)


cdef list _minimal_list(PotSet* S):
    cdef list out = []
    cdef int i, k, w
    cdef uint64_t vnot[2 * MAXWORDS]
    cdef uint64_t* vm
    cdef int64_t* v
    for i in range(S.count):
        vm = S.masks + <size_t>i * 2 * S.nwords
        for w in range(2 * S.nwords):
            vnot[w] = ~vm[w]
        v = S.vecs + <size_t>i * S.dim
        if _find_reducer(S, v, vnot, S.norms[i], i) < 0:
            out.append(tuple([v[k] for k in range(S.dim)]))
    return out


# ---------------------------------------------------------------------------
# Steepest augmentation step
# ---------------------------------------------------------------------------

cdef int64_t _ipow(int64_t base, int64_t e) nogil:
    cdef int64_t r = 1
    while e > 0:
        r *= base
        e -= 1
    return r


cdef class StepEngine:
    """Precompiled (basis, bounds, objective) triple for repeated steps.

    All bounds must be finite and the caller must have proven that every
    objective value reachable inside the bounds fits comfortably in int64.
    """
    cdef int nb, dim
    cdef int64_t* gmat
    cdef int64_t* lo
    cdef int64_t* hi
    cdef uint8_t* kind
    cdef int64_t* shift
    cdef int8_t* sg
    cdef int64_t* p1
    cdef int64_t* p2
    cdef int32_t* pptr
    cdef int64_t* pb
    cdef int64_t* ps
    cdef int64_t* pv0
    cdef int64_t* xbuf

    def __cinit__(self, basis_rows, lo, hi, kinds, shifts, signs, p1s, p2s,
                  pwl_ptr, pwl_breaks, pwl_slopes, pwl_v0):
        cdef int j, i
        self.nb = len(basis_rows)
        self.dim = len(lo)
        self.gmat = <int64_t*>malloc(<size_t>self.nb * self.dim * sizeof(int64_t))
        self.lo = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.hi = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.kind = <uint8_t*>malloc(<size_t>self.dim * sizeof(uint8_t))
        self.shift = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.sg = <int8_t*>malloc(<size_t>self.dim * sizeof(int8_t))
        self.p1 = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.p2 = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.pptr = <int32_t*>malloc(<size_t>(self.dim + 1) * sizeof(int32_t))
        self.pb = <int64_t*>malloc(<size_t>max(1, len(pwl_breaks)) * sizeof(int64_t))
        self.ps = <int64_t*>malloc(<size_t>max(1, len(pwl_slopes)) * sizeof(int64_t))
        self.pv0 = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        self.xbuf = <int64_t*>malloc(<size_t>self.dim * sizeof(int64_t))
        if (self.gmat == NULL or self.lo == NULL or self.hi == NULL
                or self.kind == NULL or self.shift == NULL or self.sg == NULL
                or self.p1 == NULL or self.p2 == NULL or self.pptr == NULL
                or self.pb == NULL or self.ps == NULL or self.pv0 == NULL
                or self.xbuf == NULL):
            raise MemoryError()
        for j in range(self.nb):
            row = basis_rows[j]
            for i in range(self.dim):
                self.gmat[<size_t>j * self.dim + i] = row[i]
        for i in range(self.dim):
            self.lo[i] = lo[i]
            self.hi[i] = hi[i]
            self.kind[i] = kinds[i]
            self.shift[i] = shifts[i]
            self.sg[i] = signs[i]
            self.p1[i] = p1s[i]
            self.p2[i] = p2s[i]
            self.pptr[i] = pwl_ptr[i]
            self.pv0[i] = pwl_v0[i]
        self.pptr[self.dim] = pwl_ptr[self.dim]
        for i in range(len(pwl_breaks)):
            self.pb[i] = pwl_breaks[i]
        for i in range(len(pwl_slopes)):
            self.ps[i] = pwl_slopes[i]

    def __dealloc__(self):
        free(self.gmat); free(self.lo); free(self.hi); free(self.kind)
        free(self.shift); free(self.sg); free(self.p1); free(self.p2)
        free(self.pptr); free(self.pb); free(self.ps); free(self.pv0)
        free(self.xbuf)

    cdef int64_t _term(self, int i, int64_t y) nogil:
        cdef int64_t z = self.shift[i] + (y if self.sg[i] > 0 else -y)
        cdef int64_t acc, blo, bhi, seg_lo, seg_hi, length
        cdef int k, b0, b1, nseg
        if self.kind[i] == 0:
            return self.p1[i] * z
        if self.kind[i] == 1:
            return self.p1[i] * _ipow(iabs64(z), self.p2[i])
        # piecewise linear: value(0) = v0; the unit difference value(t)-value(t-1)
        # equals the slope of the segment (b_{k-1}, b_k] containing t
        b0 = self.pptr[i]
        b1 = self.pptr[i + 1]
        nseg = b1 - b0 + 1
        acc = self.pv0[i]
        if z > 0:
            for k in range(nseg):
                seg_lo = self.pb[b0 + k - 1] if k > 0 else -HUGE
                seg_hi = self.pb[b0 + k] if k < nseg - 1 else HUGE
                blo = seg_lo if seg_lo > 0 else 0
                bhi = seg_hi if seg_hi < z else z
                length = bhi - blo
                if length > 0:
                    acc += self.ps[b0 + k] * length
        elif z < 0:
            for k in range(nseg):
                seg_lo = self.pb[b0 + k - 1] if k > 0 else -HUGE
                seg_hi = self.pb[b0 + k] if k < nseg - 1 else HUGE
                blo = seg_lo if seg_lo > z else z
                bhi = seg_hi if seg_hi < 0 else 0
                length = bhi - blo
                if length > 0:
                    acc -= self.ps[b0 + k] * length
        return acc

    cdef int64_t _delta(self, int j, int sgn, int64_t alpha) nogil:
        """Objective change from x to x + alpha * sgn * g_j."""
        cdef int64_t acc = 0
        cdef int i
        cdef int64_t gi, y0, y1
        cdef int64_t* row = self.gmat + <size_t>j * self.dim
        for i in range(self.dim):
            gi = row[i] if sgn > 0 else -row[i]
            if gi == 0:
                continue
            y0 = self.xbuf[i]
            y1 = y0 + alpha * gi
            acc += self._term(i, y1) - self._term(i, y0)
        return acc

    def best_step(self, x):
        """Deterministic steepest improving (index, sign, alpha, delta), or
        None.  Scans representatives in order, + before -, keeps the first
        strict improvement; within one direction picks the leftmost minimizer
        of the convex one-dimensional restriction."""
        cdef int i, j, sgn_ix, sgn
        cdef int64_t amax, room, gi, loa, hia, mid, d
        cdef int64_t best_delta = 0
        cdef int best_j = -1, best_sgn = 0
        cdef int64_t best_alpha = 0
        cdef int64_t* row
        for i in range(self.dim):
            self.xbuf[i] = x[i]
        for j in range(self.nb):
            row = self.gmat + <size_t>j * self.dim
            for sgn_ix in range(2):
                sgn = 1 if sgn_ix == 0 else -1
                amax = HUGE
                for i in range(self.dim):
                    gi = row[i] if sgn > 0 else -row[i]
                    if gi > 0:
                        room = (self.hi[i] - self.xbuf[i]) // gi
                    elif gi < 0:
                        room = (self.xbuf[i] - self.lo[i]) // (-gi)
                    else:
                        continue
                    if room < amax:
                        amax = room
                        if amax <= 0:
                            break
                if amax < 1:
                    continue
                loa = 0
                hia = amax
                while loa < hia:
                    mid = loa + ((hia - loa) >> 1)
                    if self._delta(j, sgn, mid) <= self._delta(j, sgn, mid + 1):
                        hia = mid
                    else:
                        loa = mid + 1
                if loa < 1:
                    continue
                d = self._delta(j, sgn, loa)
                if d < best_delta:
                    best_delta = d
                    best_j = j
                    best_sgn = sgn
                    best_alpha = loa
        if best_j < 0:
            return None
        return best_j, best_sgn, best_alpha, best_delta
