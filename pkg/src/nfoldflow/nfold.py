"""Separable-convex minimization over n-fold (and generalized) integer
programs by Graver-basis augmentation.

The solver walks from a feasible point to a global optimum by repeatedly
taking the steepest improving step x -> x + alpha*g with g ranging over the
signed Graver basis and alpha over the integers that keep x within bounds;
a point admitting no improving step is a global minimum for separable
convex objectives.  All arithmetic is exact; the compiled step engine is
used only when every reachable objective value provably fits in int64.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import _backend, _kernel_py, graver as graver_mod
from .errors import BudgetExceededError, InputError, OracleEvaluationError
from .graver import Budget, GraverBasis, assemble_extended_matrix
from .lattice import Bimatrix, IntMatrix, IntVector, nfold_product, solve_integer

# statuses of SolveReport
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
BUDGET_EXCEEDED = "budget_exceeded"

_PROBE_DOUBLINGS = 48       # cap for ray probing of oracle terms
_PHASE1_COLUMN_LIMIT = 18   # widest n-fold artificial system solved by default
_DFS_NODE_CAP = 5_000_000
_I64_GUARD = 1 << 58


# ---------------------------------------------------------------------------
# Univariate convex terms
# ---------------------------------------------------------------------------

class LinearTerm:
    """c * x."""

    __slots__ = ("coefficient",)
    kind = "linear"

    def __init__(self, coefficient: int):
        self.coefficient = int(coefficient)

    def value(self, z: int) -> int:
        return self.coefficient * z

    def ray(self, dz: int):
        """(superlinear_growth, eventual_slope_per_step) along z0 + a*dz."""
        return False, self.coefficient * dz

    def __repr__(self):
        return f"LinearTerm({self.coefficient})"

    def __eq__(self, other):
        return isinstance(other, LinearTerm) and self.coefficient == other.coefficient


class AbsPowerTerm:
    """weight * |x| ** exponent, convex for exponent >= 1, weight >= 0."""

    __slots__ = ("weight", "exponent")
    kind = "abs_power"

    def __init__(self, weight: int, exponent: int):
        self.weight = int(weight)
        self.exponent = int(exponent)
        if self.weight < 0:
            raise InputError("abs-power weight must be nonnegative", field="weight")
        if self.exponent < 1:
            raise InputError("abs-power exponent must be >= 1", field="exponent")

    def value(self, z: int) -> int:
        return self.weight * abs(z) ** self.exponent

    def ray(self, dz: int):
        if self.weight == 0 or dz == 0:
            return False, 0
        if self.exponent >= 2:
            return True, 0
        return False, self.weight * abs(dz)

    def __repr__(self):
        return f"AbsPowerTerm({self.weight}, {self.exponent})"

    def __eq__(self, other):
        return (
            isinstance(other, AbsPowerTerm)
            and (self.weight, self.exponent) == (other.weight, other.exponent)
        )


class PiecewiseLinearTerm:
    """Convex piecewise-linear term pinned by its value at 0.

    The unit difference value(t) - value(t-1) equals slopes[k] where k is
    the number of breakpoints strictly below t, so slopes[0] applies far
    left and slopes[-1] far right; convexity requires nondecreasing slopes.
    """

    __slots__ = ("value_at_zero", "breakpoints", "slopes")
    kind = "piecewise_linear"

    def __init__(self, value_at_zero: int, breakpoints: Sequence[int], slopes: Sequence[int]):
        self.value_at_zero = int(value_at_zero)
        self.breakpoints = tuple(int(b) for b in breakpoints)
        self.slopes = tuple(int(s) for s in slopes)
        if len(self.slopes) != len(self.breakpoints) + 1:
            raise InputError("need exactly one more slope than breakpoints", field="slopes")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise InputError("breakpoints must be strictly increasing", field="breakpoints")
        if any(s2 < s1 for s1, s2 in zip(self.slopes, self.slopes[1:])):
            raise InputError("slopes must be nondecreasing (convexity)", field="slopes")

    def value(self, z: int) -> int:
        acc = self.value_at_zero
        bp, sl = self.breakpoints, self.slopes
        nseg = len(sl)
        if z > 0:
            for k in range(nseg):
                seg_lo = bp[k - 1] if k > 0 else None
                seg_hi = bp[k] if k < nseg - 1 else None
                blo = 0 if seg_lo is None or seg_lo < 0 else seg_lo
                bhi = z if seg_hi is None or seg_hi > z else seg_hi
                if bhi > blo:
                    acc += sl[k] * (bhi - blo)
        elif z < 0:
            for k in range(nseg):
                seg_lo = bp[k - 1] if k > 0 else None
                seg_hi = bp[k] if k < nseg - 1 else None
                blo = z if seg_lo is None or seg_lo < z else seg_lo
                bhi = 0 if seg_hi is None or seg_hi > 0 else seg_hi
                if bhi > blo:
                    acc -= sl[k] * (bhi - blo)
        return acc

    def ray(self, dz: int):
        if dz == 0:
            return False, 0
        slope = self.slopes[-1] if dz > 0 else self.slopes[0]
        return False, slope * dz

    def __repr__(self):
        return (
            f"PiecewiseLinearTerm({self.value_at_zero}, {list(self.breakpoints)},"
            f" {list(self.slopes)})"
        )

    def __eq__(self, other):
        return (
            isinstance(other, PiecewiseLinearTerm)
            and (self.value_at_zero, self.breakpoints, self.slopes)
            == (other.value_at_zero, other.breakpoints, other.slopes)
        )


class OracleTerm:
    """Convex term available only through a value handle used in
    comparisons; exact evaluation of the objective is refused."""

    __slots__ = ("handle",)
    kind = "oracle"

    def __init__(self, handle: Callable[[int], int]):
        self.handle = handle

    def value(self, z: int) -> int:
        return int(self.handle(z))

    def ray(self, dz: int):
        return None  # unknown: caller must probe

    def __repr__(self):
        return f"OracleTerm({self.handle!r})"


class ShiftedTerm:
    """inner evaluated at (shift - x) when negate else (shift + x).

    Affine substitution preserves convexity; used for capacity-slack costs
    f(u - x0) and for the reflected objective f(-y) on slack coordinates.
    """

    __slots__ = ("inner", "shift", "negate")
    kind = "shifted"

    def __init__(self, inner, shift: int = 0, negate: bool = False):
        self.inner = inner
        self.shift = int(shift)
        self.negate = bool(negate)

    def value(self, z: int) -> int:
        return self.inner.value(self.shift + (-z if self.negate else z))

    def ray(self, dz: int):
        return self.inner.ray(-dz if self.negate else dz)

    def __repr__(self):
        return f"ShiftedTerm({self.inner!r}, shift={self.shift}, negate={self.negate})"

    def __eq__(self, other):
        return (
            isinstance(other, ShiftedTerm)
            and (self.inner, self.shift, self.negate)
            == (other.inner, other.shift, other.negate)
        )


def _flatten_rec(term):
    """(base_term, shift, sign) with value(x) = base(shift + sign*x)."""
    if not isinstance(term, ShiftedTerm):
        return term, 0, 1
    base, s2, g2 = _flatten_rec(term.inner)
    s1 = term.shift
    g1 = -1 if term.negate else 1
    # term.value(x) = inner(s1 + g1*x) = base(s2 + g2*(s1 + g1*x))
    return base, s2 + g2 * s1, g2 * g1


def _contains_oracle(term) -> bool:
    while isinstance(term, ShiftedTerm):
        term = term.inner
    return isinstance(term, OracleTerm)


class SeparableConvexObjective:
    """Sum of univariate convex terms, one per coordinate."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence):
        self.terms = tuple(terms)

    @classmethod
    def zeros(cls, dim: int) -> "SeparableConvexObjective":
        return cls([LinearTerm(0)] * dim)

    @property
    def dim(self) -> int:
        return len(self.terms)

    @property
    def has_oracle(self) -> bool:
        return any(_contains_oracle(t) for t in self.terms)

    def evaluate(self, x) -> int:
        """Exact objective value; refuses oracle terms."""
        entries = x.entries if isinstance(x, IntVector) else tuple(x)
        if len(entries) != len(self.terms):
            raise InputError(
                f"objective has {len(self.terms)} terms, point has {len(entries)}"
            )
        if self.has_oracle:
            raise OracleEvaluationError(
                "objective contains oracle terms: comparisons only"
            )
        return sum(t.value(z) for t, z in zip(self.terms, entries))

    def _raw_value(self, entries) -> int:
        # internal: allowed on oracle terms, used only inside comparisons
        return sum(t.value(z) for t, z in zip(self.terms, entries))

    def __repr__(self):
        return f"SeparableConvexObjective({len(self.terms)} terms)"


def evaluate(objective: SeparableConvexObjective, x) -> int:
    return objective.evaluate(x)


# ---------------------------------------------------------------------------
# Programs and reports
# ---------------------------------------------------------------------------

def _check_bounds(lower, upper, dim):
    lower = tuple(lower)
    upper = tuple(upper)
    if len(lower) != dim or len(upper) != dim:
        raise InputError("bound vectors must match the variable count")
    for lo, hi in zip(lower, upper):
        if lo is not None and hi is not None and lo > hi:
            raise InputError(f"empty bound interval [{lo}, {hi}]")
    return lower, upper


class NFoldProgram:
    """A^(n) x = b with componentwise integer bounds (None = unbounded)."""

    __slots__ = ("A", "n", "b", "lower", "upper", "_matrix")

    def __init__(self, A: Bimatrix, n: int, b: IntVector, lower, upper):
        if n < 1:
            raise InputError("n must be >= 1")
        self.A = A
        self.n = int(n)
        self.b = b
        if b.dim != A.r + n * A.s:
            raise InputError(
                f"rhs dimension {b.dim}, expected {A.r + n * A.s}"
            )
        self.lower, self.upper = _check_bounds(lower, upper, n * A.t)
        self._matrix = None

    @property
    def dim(self) -> int:
        return self.n * self.A.t

    def matrix(self) -> IntMatrix:
        if self._matrix is None:
            self._matrix = nfold_product(self.A, self.n)
        return self._matrix

    def is_feasible(self, x: IntVector) -> bool:
        if x.dim != self.dim:
            return False
        if self.matrix().apply(x) != self.b:
            return False
        return _within_bounds(x.entries, self.lower, self.upper)


class GeneralizedNFoldProgram:
    """A^(n) x = b with window bounds on W^(n) x and separable convex costs
    f on the W-image and g on x."""

    __slots__ = ("A", "W", "n", "b", "lower", "upper", "w_lower", "w_upper",
                 "f", "g", "_wmatrix", "_amatrix")

    def __init__(self, A: Bimatrix, W: Bimatrix, n: int, b: IntVector,
                 lower, upper, w_lower, w_upper,
                 f: SeparableConvexObjective, g: SeparableConvexObjective):
        if A.t != W.t:
            raise InputError("A and W must share their column count")
        if n < 1:
            raise InputError("n must be >= 1")
        self.A, self.W, self.n, self.b = A, W, int(n), b
        if b.dim != A.r + n * A.s:
            raise InputError(f"rhs dimension {b.dim}, expected {A.r + n * A.s}")
        self.lower, self.upper = _check_bounds(lower, upper, n * A.t)
        wdim = W.r + n * W.s
        self.w_lower, self.w_upper = _check_bounds(w_lower, w_upper, wdim)
        if f.dim != wdim:
            raise InputError(f"f has {f.dim} terms, expected {wdim}")
        if g.dim != n * A.t:
            raise InputError(f"g has {g.dim} terms, expected {n * A.t}")
        self.f, self.g = f, g
        self._wmatrix = None
        self._amatrix = None

    @property
    def dim(self) -> int:
        return self.n * self.A.t

    def amatrix(self) -> IntMatrix:
        if self._amatrix is None:
            self._amatrix = nfold_product(self.A, self.n)
        return self._amatrix

    def wmatrix(self) -> IntMatrix:
        if self._wmatrix is None:
            self._wmatrix = nfold_product(self.W, self.n)
        return self._wmatrix


@dataclass
class SolveReport:
    status: str
    solution: Optional[IntVector] = None
    objective_value: Optional[int] = None
    augmentation_steps: int = 0
    graver_size: Optional[int] = None
    wall_time: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


def _within_bounds(entries, lower, upper) -> bool:
    for v, lo, hi in zip(entries, lower, upper):
        if lo is not None and v < lo:
            return False
        if hi is not None and v > hi:
            return False
    return True


# ---------------------------------------------------------------------------
# Steepest augmenting step
# ---------------------------------------------------------------------------

@dataclass
class AugmentOutcome:
    kind: str                      # "improved" | "none" | "unbounded"
    x: Optional[IntVector] = None
    direction: Optional[IntVector] = None
    step: int = 0
    delta: Optional[int] = None


def _ray_analysis(terms, g):
    """(superlinear, slope) of the objective along x + a*g, or None when an
    oracle term leaves it unknown."""
    superlinear = False
    slope = 0
    for i, gi in enumerate(g):
        if gi == 0:
            continue
        r = terms[i].ray(gi)
        if r is None:
            return None
        sup, sl = r
        superlinear = superlinear or sup
        slope += sl
    return superlinear, slope


def _best_step_py(basis: GraverBasis, x_entries, objective, lower, upper):
    """Reference steepest-step search; mirrors the compiled engine's order:
    representatives ascending, + before -, strict improvements only,
    leftmost minimizer along each direction."""
    terms = objective.terms
    best = None  # (delta, j, sign, alpha, g_entries)
    for j, rep in enumerate(basis.elements):
        for sign in (1, -1):
            g = rep.entries if sign == 1 else tuple(-a for a in rep.entries)
            amax = _kernel_py.max_step(x_entries, g, lower, upper)
            if amax is not None and amax < 1:
                continue
            support = [i for i, gi in enumerate(g) if gi]

            def phi(alpha, _g=g, _s=support):
                return sum(
                    terms[i].value(x_entries[i] + alpha * _g[i])
                    - terms[i].value(x_entries[i])
                    for i in _s
                )

            if amax is None:
                ray = _ray_analysis(terms, g)
                if ray is None:
                    # oracle terms: probe by doubling up to a hard cap
                    a, prev = 1, phi(1)
                    if prev >= 0:
                        hi = 1
                    else:
                        hi = None
                        for _ in range(_PROBE_DOUBLINGS):
                            if phi(2 * a) >= prev:
                                hi = 2 * a
                                break
                            a *= 2
                            prev = phi(a)
                        if hi is None:
                            raise BudgetExceededError(
                                "oracle ray probe cap reached on an unbounded direction"
                            )
                else:
                    superlinear, slope = ray
                    if not superlinear and slope < 0:
                        return AugmentOutcome(kind="unbounded", direction=IntVector(g))
                    a = 1
                    while phi(2 * a) < phi(a):
                        a *= 2
                    hi = 2 * a
                alpha = _kernel_py.argmin_convex(phi, hi)
            else:
                alpha = _kernel_py.argmin_convex(phi, amax)
            if alpha < 1:
                continue
            d = phi(alpha)
            if d < 0 and (best is None or d < best[0]):
                best = (d, j, sign, alpha, g)
    if best is None:
        return AugmentOutcome(kind="none")
    d, j, sign, alpha, g = best
    new_x = IntVector(a + alpha * b for a, b in zip(x_entries, g))
    return AugmentOutcome(
        kind="improved", x=new_x, direction=IntVector(g), step=alpha, delta=d
    )


def _term_abs_bound(term, zlo: int, zhi: int) -> int:
    """Exact max of |term.value| over the integer interval [zlo, zhi]."""
    base, shift, sign = _flatten_rec(term)
    a, b = shift + sign * zlo, shift + sign * zhi
    if a > b:
        a, b = b, a
    candidates = [a, b]
    if isinstance(base, PiecewiseLinearTerm):
        candidates.extend(p for p in base.breakpoints if a <= p <= b)
    if isinstance(base, AbsPowerTerm) and a <= 0 <= b:
        candidates.append(0)
    return max(abs(base.value(z)) for z in candidates)


def _compile_engine(basis: GraverBasis, objective, lower, upper):
    """Build the compiled step engine when it is provably exact, else None."""
    if not _backend.HAVE_CKERNEL or len(basis) == 0:
        return None
    dim = basis.ambient_dimension
    if any(lo is None or hi is None for lo, hi in zip(lower, upper)):
        return None
    kinds, shifts, signs, p1s, p2s = [], [], [], [], []
    pwl_ptr, pwl_breaks, pwl_slopes, pwl_v0 = [], [], [], []
    total_bound = 0
    for i, term in enumerate(objective.terms):
        base, shift, sign = _flatten_rec(term)
        pwl_ptr.append(len(pwl_breaks))
        if isinstance(base, LinearTerm):
            kinds.append(0); p1s.append(base.coefficient); p2s.append(0); pwl_v0.append(0)
        elif isinstance(base, AbsPowerTerm):
            if base.exponent > 40:
                return None
            kinds.append(1); p1s.append(base.weight); p2s.append(base.exponent); pwl_v0.append(0)
        elif isinstance(base, PiecewiseLinearTerm):
            kinds.append(2); p1s.append(0); p2s.append(0)
            pwl_breaks.extend(base.breakpoints)
            pwl_slopes.extend(base.slopes)
            pwl_v0.append(base.value_at_zero)
        else:
            return None
        shifts.append(shift)
        signs.append(sign)
        total_bound += _term_abs_bound(term, lower[i], upper[i])
        if abs(shift) > _I64_GUARD or abs(lower[i]) > _I64_GUARD or abs(upper[i]) > _I64_GUARD:
            return None
    # slopes must also stay in range for pwl closed forms
    if any(abs(v) > _I64_GUARD for v in pwl_breaks + pwl_slopes + pwl_v0):
        return None
    if 4 * total_bound > _I64_GUARD:
        return None
    # where kind==2, the c path needs one slope even if there are no breaks
    pwl_ptr.append(len(pwl_breaks))
    rows = [g.entries for g in basis.elements]
    if any(abs(v) > _I64_GUARD for row in rows for v in row):
        return None
    return _backend.ckernel.StepEngine(
        rows, list(lower), list(upper), kinds, shifts, signs, p1s, p2s,
        pwl_ptr, pwl_breaks, pwl_slopes, pwl_v0,
    )


def augment_step(basis: GraverBasis, x: IntVector, objective, lower, upper) -> AugmentOutcome:
    """One steepest improving augmentation from x, or "none"/"unbounded"."""
    lower, upper = _check_bounds(lower, upper, x.dim)
    return _best_step_py(basis, x.entries, objective, lower, upper)


# ---------------------------------------------------------------------------
# Minimization driver
# ---------------------------------------------------------------------------

def _minimize_core(basis, x: IntVector, objective, lower, upper,
                   budget: Budget, deadline) -> SolveReport:
    t0 = time.monotonic()
    engine = _compile_engine(basis, objective, lower, upper)
    steps = 0
    max_steps = budget.max_steps
    while True:
        if max_steps is not None and steps >= max_steps:
            return SolveReport(
                status=BUDGET_EXCEEDED, solution=x, augmentation_steps=steps,
                graver_size=len(basis), wall_time=time.monotonic() - t0,
            )
        if deadline is not None and time.monotonic() > deadline:
            return SolveReport(
                status=BUDGET_EXCEEDED, solution=x, augmentation_steps=steps,
                graver_size=len(basis), wall_time=time.monotonic() - t0,
            )
        if engine is not None:
            hit = engine.best_step(list(x.entries))
            if hit is None:
                outcome = AugmentOutcome(kind="none")
            else:
                j, sign, alpha, delta = hit
                g = basis.elements[j]
                gv = g if sign == 1 else -g
                outcome = AugmentOutcome(
                    kind="improved", x=x + gv.scale(alpha),
                    direction=gv, step=alpha, delta=delta,
                )
        else:
            outcome = _best_step_py(basis, x.entries, objective, lower, upper)
        if outcome.kind == "improved":
            x = outcome.x
            steps += 1
            continue
        if outcome.kind == "unbounded":
            return SolveReport(
                status=UNBOUNDED, solution=None, augmentation_steps=steps,
                graver_size=len(basis), wall_time=time.monotonic() - t0,
            )
        value = None if objective.has_oracle else objective.evaluate(x)
        return SolveReport(
            status=OPTIMAL, solution=x, objective_value=value,
            augmentation_steps=steps, graver_size=len(basis),
            wall_time=time.monotonic() - t0,
        )


def minimize(program: NFoldProgram, objective: SeparableConvexObjective,
             start: IntVector, budget: Optional[Budget] = None,
             basis: Optional[GraverBasis] = None) -> SolveReport:
    """Augment from a feasible start to a global optimum."""
    budget = budget or graver_mod.DEFAULT_BUDGET
    if objective.dim != program.dim:
        raise InputError("objective dimension mismatch")
    if not program.is_feasible(start):
        raise InputError("start point is not feasible")
    deadline = budget.deadline()
    if basis is None:
        basis = graver_mod.nfold_graver(program.A, program.n, budget)
    return _minimize_core(
        basis, start, objective, program.lower, program.upper, budget, deadline
    )


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------

def _tighten_bounds(rows, rhs, lower, upper, passes=60):
    """Interval propagation over equality rows; returns (lower, upper) or
    None when some row is proven empty."""
    lower = list(lower)
    upper = list(upper)
    d = len(lower)
    idx_rows = [
        (tuple(r), [(j, r[j]) for j in range(d) if r[j]], b)
        for r, b in zip(rows, rhs)
    ]
    NEG, POS = -1, 1
    for _ in range(passes):
        changed = False
        for _, nz, b in idx_rows:
            # per-term contribution intervals
            fin_min = fin_max = 0
            inf_min = inf_max = 0
            term_min, term_max = {}, {}
            for j, a in nz:
                lo, hi = lower[j], upper[j]
                tmin = a * lo if a > 0 else (a * hi if hi is not None else None)
                if a > 0 and lo is None:
                    tmin = None
                tmax = a * hi if a > 0 else (a * lo if lo is not None else None)
                if a > 0 and hi is None:
                    tmax = None
                term_min[j], term_max[j] = tmin, tmax
                if tmin is None:
                    inf_min += 1
                else:
                    fin_min += tmin
                if tmax is None:
                    inf_max += 1
                else:
                    fin_max += tmax
            if inf_min == 0 and fin_min > b:
                return None
            if inf_max == 0 and fin_max < b:
                return None
            for j, a in nz:
                tmin, tmax = term_min[j], term_max[j]
                # bounds on a*x_j from the row minus the other terms
                others_min_ok = inf_min == (1 if tmin is None else 0)
                others_max_ok = inf_max == (1 if tmax is None else 0)
                if others_max_ok:
                    others_max = fin_max - (tmax if tmax is not None else 0)
                    lo_ax = b - others_max
                    if a > 0:
                        cand = -((-lo_ax) // a)
                        if lower[j] is None or cand > lower[j]:
                            lower[j] = cand
                            changed = True
                    else:
                        cand = lo_ax // a
                        if upper[j] is None or cand < upper[j]:
                            upper[j] = cand
                            changed = True
                if others_min_ok:
                    others_min = fin_min - (tmin if tmin is not None else 0)
                    hi_ax = b - others_min
                    if a > 0:
                        cand = hi_ax // a
                        if upper[j] is None or cand < upper[j]:
                            upper[j] = cand
                            changed = True
                    else:
                        cand = -((-hi_ax) // a)
                        if lower[j] is None or cand > lower[j]:
                            lower[j] = cand
                            changed = True
            for lo, hi in zip(lower, upper):
                if lo is not None and hi is not None and lo > hi:
                    return None
        if not changed:
            break
    return lower, upper


def _dfs_first_point(matrix: IntMatrix, b: IntVector, lower, upper,
                     deadline=None, node_cap=_DFS_NODE_CAP):
    """Lexicographically first integer point with M x = b inside finite
    bounds, or None; exact exhaustion proves infeasibility."""
    d = matrix.cols
    if d == 0:
        return IntVector(()) if b.is_zero() else None
    rows = [list(matrix.row(i)) for i in range(matrix.rows)]
    rhs = list(b.entries)
    # suffix min/max contributions per row
    nrows = len(rows)
    suf_min = [[0] * (d + 1) for _ in range(nrows)]
    suf_max = [[0] * (d + 1) for _ in range(nrows)]
    for r in range(nrows):
        for j in range(d - 1, -1, -1):
            a = rows[r][j]
            tmin = min(a * lower[j], a * upper[j])
            tmax = max(a * lower[j], a * upper[j])
            suf_min[r][j] = suf_min[r][j + 1] + tmin
            suf_max[r][j] = suf_max[r][j + 1] + tmax
    x = [0] * d
    partial = [0] * nrows
    nodes = 0

    def feasible_prefix(j):
        for r in range(nrows):
            lo = partial[r] + suf_min[r][j]
            hi = partial[r] + suf_max[r][j]
            if not (lo <= rhs[r] <= hi):
                return False
        return True

    def rec(j):
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise BudgetExceededError("feasibility search node cap reached")
        if deadline is not None and nodes % 1024 == 0 and time.monotonic() > deadline:
            raise BudgetExceededError("feasibility search time budget reached")
        if j == d:
            return all(partial[r] == rhs[r] for r in range(nrows))
        for v in range(lower[j], upper[j] + 1):
            x[j] = v
            for r in range(nrows):
                partial[r] += rows[r][j] * v
            if feasible_prefix(j + 1) and rec(j + 1):
                return True
            for r in range(nrows):
                partial[r] -= rows[r][j] * v
        return False

    if not feasible_prefix(0):
        return None
    if rec(0):
        return IntVector(x)
    return None


def _phase_one(program: NFoldProgram, budget: Budget):
    """Artificial-variable feasibility: extend each block with +/- identity
    columns, start with artificials absorbing the residual, and minimize
    their linear sum; optimum zero yields a feasible original point."""
    A, n = program.A, program.n
    r, s, t = A.r, A.s, A.t
    # translate so that 0 is within bounds wherever a bound excludes it
    shift = []
    for lo, hi in zip(program.lower, program.upper):
        if lo is not None and lo > 0:
            shift.append(lo)
        elif hi is not None and hi < 0:
            shift.append(hi)
        else:
            shift.append(0)
    b_res = program.b - program.matrix().apply(IntVector(shift))

    a1_rows = []
    for i in range(r):
        unit_p = [0] * r
        unit_p[i] = 1
        unit_m = [0] * r
        unit_m[i] = -1
        a1_rows.append(list(A.A1.row(i)) + unit_p + unit_m + [0] * (2 * s))
    a2_rows = []
    for i in range(s):
        unit_p = [0] * s
        unit_p[i] = 1
        unit_m = [0] * s
        unit_m[i] = -1
        a2_rows.append(list(A.A2.row(i)) + [0] * (2 * r) + unit_p + unit_m)
    ext = Bimatrix.from_rows(a1_rows, a2_rows, t=t + 2 * r + 2 * s)

    width = t + 2 * r + 2 * s
    lower, upper, terms, start = [], [], [], []
    for k in range(n):
        for i in range(t):
            j = k * t + i
            lo = None if program.lower[j] is None else program.lower[j] - shift[j]
            hi = None if program.upper[j] is None else program.upper[j] - shift[j]
            lower.append(lo)
            upper.append(hi)
            terms.append(LinearTerm(0))
            start.append(0)
        block_res = b_res.entries[r + k * s : r + (k + 1) * s]
        top_res = b_res.entries[:r] if k == 0 else (0,) * r
        for resid in top_res:
            start.append(max(resid, 0))
        for resid in top_res:
            start.append(max(-resid, 0))
        for resid in block_res:
            start.append(max(resid, 0))
        for resid in block_res:
            start.append(max(-resid, 0))
        lower.extend([0] * (2 * r + 2 * s))
        upper.extend([None] * (2 * r + 2 * s))
        terms.extend([LinearTerm(1)] * (2 * r + 2 * s))

    phase = NFoldProgram(ext, n, b_res, lower, upper)
    report = minimize(phase, SeparableConvexObjective(terms), IntVector(start), budget)
    if report.status == BUDGET_EXCEEDED:
        raise BudgetExceededError("phase-one augmentation budget exceeded")
    if report.status != OPTIMAL or report.objective_value != 0:
        return None
    x = []
    for k in range(n):
        base = k * width
        x.extend(
            report.solution.entries[base + i] + shift[k * t + i] for i in range(t)
        )
    return IntVector(x)


def find_feasible(program: NFoldProgram, budget: Optional[Budget] = None,
                  phase_one: str = "auto") -> Optional[IntVector]:
    """A feasible point of the program, or None when provably infeasible.

    Layered: trivial zero check, unrestricted integer solve (certifies
    infeasibility when no integer solution exists at all), the artificial-
    variable augmentation when the extended system is small enough (or
    phase_one="always"), then exact bounded search.  Raises
    BudgetExceededError when no layer can decide within budget.
    """
    budget = budget or graver_mod.DEFAULT_BUDGET
    deadline = budget.deadline()
    M = program.matrix()

    zero = IntVector.zero(program.dim)
    if _within_bounds(zero.entries, program.lower, program.upper) and program.b.is_zero():
        return zero

    unrestricted = solve_integer(M, program.b)
    if unrestricted is None:
        return None  # no integer solution even ignoring bounds
    if _within_bounds(unrestricted.entries, program.lower, program.upper):
        return unrestricted

    width = program.A.t + 2 * program.A.r + 2 * program.A.s
    if phase_one == "always" or (
        phase_one == "auto" and program.n * width <= _PHASE1_COLUMN_LIMIT
    ):
        return _phase_one(program, budget)

    tightened = _tighten_bounds(
        [M.row(i) for i in range(M.rows)], program.b.entries,
        program.lower, program.upper,
    )
    if tightened is None:
        return None
    lo, hi = tightened
    if all(l is not None and h is not None for l, h in zip(lo, hi)):
        return _dfs_first_point(M, program.b, lo, hi, deadline)
    raise BudgetExceededError(
        "cannot certify feasibility: unbounded box and phase-one gated out"
    )


def solve(program: NFoldProgram, objective: SeparableConvexObjective,
          budget: Optional[Budget] = None,
          start: Optional[IntVector] = None) -> SolveReport:
    """Feasibility phase then augmentation to optimality."""
    budget = budget or graver_mod.DEFAULT_BUDGET
    t0 = time.monotonic()
    if start is None:
        try:
            start = find_feasible(program, budget)
        except BudgetExceededError:
            return SolveReport(status=BUDGET_EXCEEDED, wall_time=time.monotonic() - t0)
        if start is None:
            return SolveReport(status=INFEASIBLE, wall_time=time.monotonic() - t0)
    try:
        return minimize(program, objective, start, budget)
    except BudgetExceededError:
        return SolveReport(status=BUDGET_EXCEEDED, wall_time=time.monotonic() - t0)


# ---------------------------------------------------------------------------
# Generalized programs
# ---------------------------------------------------------------------------

def _lift_generalized(program: GeneralizedNFoldProgram):
    """Rewrite min f(Wx)+g(x) over the window bounds as a plain augmentation
    problem over the block matrix ((A,0),(W,I)) with y = -Wx."""
    wdim = program.W.r + program.n * program.W.s
    B = assemble_extended_matrix(program.A, program.W, program.n)
    b_lift = program.b.concat(IntVector.zero(wdim))
    lower = list(program.lower) + [
        None if u is None else -u for u in program.w_upper
    ]
    upper = list(program.upper) + [
        None if l is None else -l for l in program.w_lower
    ]
    terms = list(program.g.terms) + [
        ShiftedTerm(t, shift=0, negate=True) for t in program.f.terms
    ]
    return B, b_lift, tuple(lower), tuple(upper), SeparableConvexObjective(terms)


def _generalized_start(program: GeneralizedNFoldProgram, budget, deadline):
    """Feasible lifted point, None if infeasible; exact bounded search on x
    with the W-window folded in as extra rows."""
    wdim = program.W.r + program.n * program.W.s
    Am = program.amatrix()
    Wm = program.wmatrix()
    # search over x only: stack A-rows (equalities) and prune the W window
    # by tightening y's box afterwards; here we simply search the combined
    # system with slack columns eliminated.
    rows = [list(Am.row(i)) + [0] * wdim for i in range(Am.rows)]
    for i in range(Wm.rows):
        unit = [0] * wdim
        unit[i] = 1
        rows.append(list(Wm.row(i)) + unit)
    M = IntMatrix.from_rows(rows) if rows else IntMatrix.zeros(0, program.dim + wdim)
    b = program.b.concat(IntVector.zero(wdim))
    lower = list(program.lower) + [None if u is None else -u for u in program.w_upper]
    upper = list(program.upper) + [None if l is None else -l for l in program.w_lower]
    tightened = _tighten_bounds([M.row(i) for i in range(M.rows)], b.entries, lower, upper)
    if tightened is None:
        return None
    lo, hi = tightened
    if not all(l is not None and h is not None for l, h in zip(lo, hi)):
        raise BudgetExceededError("generalized feasibility needs a finite box")
    return _dfs_first_point(M, b, lo, hi, deadline)


def solve_generalized(program: GeneralizedNFoldProgram,
                      budget: Optional[Budget] = None,
                      start: Optional[IntVector] = None,
                      basis: Optional[GraverBasis] = None) -> SolveReport:
    """Solve the generalized program; `start` may be an x-part point (the
    slack part y = -W^(n).x is derived) or a full lifted point."""
    budget = budget or graver_mod.DEFAULT_BUDGET
    t0 = time.monotonic()
    deadline = budget.deadline()
    wdim = program.W.r + program.n * program.W.s
    B, b_lift, lower, upper, objective = _lift_generalized(program)

    if start is not None and start.dim == program.dim:
        y = -program.wmatrix().apply(start)
        start = start.concat(y)
    if start is None:
        try:
            start = _generalized_start(program, budget, deadline)
        except BudgetExceededError:
            return SolveReport(status=BUDGET_EXCEEDED, wall_time=time.monotonic() - t0)
        if start is None:
            return SolveReport(status=INFEASIBLE, wall_time=time.monotonic() - t0)
    if B.apply(start) != b_lift or not _within_bounds(start.entries, lower, upper):
        raise InputError("start point is not feasible for the lifted program")

    if basis is None:
        try:
            basis = graver_mod.extended_nfold_graver(
                program.A, program.W, program.n, budget, strategy="auto"
            )
        except BudgetExceededError:
            return SolveReport(status=BUDGET_EXCEEDED, wall_time=time.monotonic() - t0)
    try:
        report = _minimize_core(basis, start, objective, lower, upper, budget, deadline)
    except BudgetExceededError:
        return SolveReport(status=BUDGET_EXCEEDED, wall_time=time.monotonic() - t0)
    if report.status == OPTIMAL:
        full = report.solution
        x = IntVector(full.entries[: program.dim])
        # the identity block pins y to -W^(n) x
        assert IntVector(full.entries[program.dim :]) == -program.wmatrix().apply(x)
        report.solution = x
    report.wall_time = time.monotonic() - t0
    return report
