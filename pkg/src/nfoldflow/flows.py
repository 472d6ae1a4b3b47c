"""Integer multicommodity transshipment and transportation.

Instances are reduced to (generalized) n-fold integer programs in the three
block shapes this package solves:

  * transshipment with a slack commodity: bimatrix (I_t; D), one extra
    flow block absorbing residual capacity, capacities as equalities;
  * transshipment with window bounds: A = (empty; D), W = (I_t; empty),
    combined loads bounded by capacity;
  * transportation: A = (I_ml; [I_l ... I_l]), W carrying per-supplier
    volume rows, consumers as blocks.

Vertex demand follows the incidence-matrix sign convention: (Dx)_v is the
net INFLOW at v, so positive demand means the vertex absorbs flow.

The module also houses the exact enumeration oracle used for acceptance
cross-checks (a depth-first search over edge assignments with interval
pruning; pruning never discards a feasible point, so exhaustion certifies
infeasibility and the returned minimum is exact).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import BudgetExceededError, InputError
from .graver import Budget
from . import graver as graver_mod
from . import nfold as nfold_mod
from .lattice import (
    Bimatrix,
    Digraph,
    IntMatrix,
    IntVector,
    incidence_matrix,
    nfold_product,
    special_product,
)
from .nfold import (
    GeneralizedNFoldProgram,
    LinearTerm,
    NFoldProgram,
    SeparableConvexObjective,
    ShiftedTerm,
    SolveReport,
    INFEASIBLE,
    OPTIMAL,
)

ONES_1x3 = IntMatrix.from_rows([[1, 1, 1]])


def _as_term(obj):
    if hasattr(obj, "value") and callable(obj.value):
        return obj
    raise InputError(f"not a cost term: {obj!r}")


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

class TransshipmentInstance:
    """l commodities routed over a digraph under shared edge capacities.

    demands[k][v] is the net inflow required at vertex v for commodity k
    (vertices 0-based here, matching incidence-matrix rows).
    """

    __slots__ = ("graph", "commodities", "demands", "capacities",
                 "edge_costs", "commodity_edge_costs")

    def __init__(self, graph: Digraph, demands, capacities,
                 edge_costs=None, commodity_edge_costs=None):
        self.graph = graph
        self.demands = tuple(tuple(int(v) for v in row) for row in demands)
        self.commodities = len(self.demands)
        if self.commodities < 1:
            raise InputError("need at least one commodity", field="demands")
        s, t = graph.vertex_count, graph.edge_count
        for row in self.demands:
            if len(row) != s:
                raise InputError(
                    f"demand row has {len(row)} entries, expected {s}",
                    field="demands",
                )
        self.capacities = tuple(int(u) for u in capacities)
        if len(self.capacities) != t:
            raise InputError(
                f"{len(self.capacities)} capacities for {t} edges",
                field="capacities",
            )
        if any(u < 0 for u in self.capacities):
            raise InputError("capacities must be nonnegative", field="capacities")
        if edge_costs is None:
            edge_costs = [LinearTerm(0)] * t
        if commodity_edge_costs is None:
            commodity_edge_costs = [[LinearTerm(0)] * t for _ in range(self.commodities)]
        self.edge_costs = tuple(_as_term(c) for c in edge_costs)
        self.commodity_edge_costs = tuple(
            tuple(_as_term(c) for c in row) for row in commodity_edge_costs
        )
        if len(self.edge_costs) != t:
            raise InputError("one edge cost per edge required", field="edge_costs")
        if len(self.commodity_edge_costs) != self.commodities or any(
            len(row) != t for row in self.commodity_edge_costs
        ):
            raise InputError(
                "commodity-edge costs must be commodities x edges",
                field="commodity_edge_costs",
            )

    def balanced(self) -> bool:
        """Zero demand sum per commodity; necessary for feasibility."""
        return all(sum(row) == 0 for row in self.demands)

    def cost_of(self, flows) -> int:
        total = 0
        t = self.graph.edge_count
        for e in range(t):
            load = sum(flows[k][e] for k in range(self.commodities))
            total += self.edge_costs[e].value(load)
            for k in range(self.commodities):
                total += self.commodity_edge_costs[k][e].value(flows[k][e])
        return total


class TransportationInstance:
    """Bipartite flow from m suppliers to n consumers, l commodities with
    unit volumes sharing edge capacity."""

    __slots__ = ("suppliers", "consumers", "commodities", "volumes",
                 "supplies", "consumptions", "capacities",
                 "edge_costs", "commodity_edge_costs")

    def __init__(self, volumes, supplies, consumptions, capacities,
                 edge_costs=None, commodity_edge_costs=None):
        self.volumes = tuple(int(v) for v in volumes)
        self.commodities = len(self.volumes)
        if self.commodities < 1:
            raise InputError("need at least one commodity", field="volumes")
        if any(v < 0 for v in self.volumes):
            raise InputError("volumes must be nonnegative", field="volumes")
        self.supplies = tuple(tuple(int(x) for x in row) for row in supplies)
        self.consumptions = tuple(tuple(int(x) for x in row) for row in consumptions)
        self.suppliers = len(self.supplies)
        self.consumers = len(self.consumptions)
        if self.suppliers < 1 or self.consumers < 1:
            raise InputError("need at least one supplier and one consumer")
        if any(len(row) != self.commodities for row in self.supplies):
            raise InputError("each supply row lists one entry per commodity",
                             field="supplies")
        if any(len(row) != self.commodities for row in self.consumptions):
            raise InputError("each consumption row lists one entry per commodity",
                             field="consumptions")
        if any(x < 0 for row in self.supplies for x in row) or any(
            x < 0 for row in self.consumptions for x in row
        ):
            raise InputError("supplies and consumptions must be nonnegative")
        self.capacities = tuple(tuple(int(u) for u in row) for row in capacities)
        if len(self.capacities) != self.suppliers or any(
            len(row) != self.consumers for row in self.capacities
        ):
            raise InputError("capacities must be suppliers x consumers",
                             field="capacities")
        if any(u < 0 for row in self.capacities for u in row):
            raise InputError("capacities must be nonnegative", field="capacities")
        m, n, l = self.suppliers, self.consumers, self.commodities
        if edge_costs is None:
            edge_costs = [[LinearTerm(0)] * n for _ in range(m)]
        if commodity_edge_costs is None:
            commodity_edge_costs = [
                [[LinearTerm(0)] * l for _ in range(m)] for _ in range(n)
            ]
        self.edge_costs = tuple(tuple(_as_term(c) for c in row) for row in edge_costs)
        if len(self.edge_costs) != m or any(len(r) != n for r in self.edge_costs):
            raise InputError("edge costs must be suppliers x consumers",
                             field="edge_costs")
        self.commodity_edge_costs = tuple(
            tuple(tuple(_as_term(c) for c in cell) for cell in row)
            for row in commodity_edge_costs
        )
        if len(self.commodity_edge_costs) != n or any(
            len(row) != m for row in self.commodity_edge_costs
        ) or any(len(cell) != l for row in self.commodity_edge_costs for cell in row):
            raise InputError(
                "commodity-edge costs must be consumers x suppliers x commodities",
                field="commodity_edge_costs",
            )

    def balanced(self) -> bool:
        """Supply equals consumption per commodity; necessary condition."""
        return all(
            sum(row[k] for row in self.supplies)
            == sum(row[k] for row in self.consumptions)
            for k in range(self.commodities)
        )

    def cost_of(self, flows) -> int:
        """flows[j][i][k]: commodity k from supplier i to consumer j."""
        total = 0
        for j in range(self.consumers):
            for i in range(self.suppliers):
                load = sum(
                    self.volumes[k] * flows[j][i][k] for k in range(self.commodities)
                )
                total += self.edge_costs[i][j].value(load)
                for k in range(self.commodities):
                    total += self.commodity_edge_costs[j][i][k].value(flows[j][i][k])
        return total


@dataclass
class FlowSolution:
    """Validated flow assignment with its exact cost."""

    flows: tuple
    loads: tuple
    total_cost: int

    @classmethod
    def for_transshipment(cls, inst: TransshipmentInstance, flows):
        flows = tuple(tuple(int(x) for x in row) for row in flows)
        l, t = inst.commodities, inst.graph.edge_count
        if len(flows) != l or any(len(row) != t for row in flows):
            raise InputError("flow table must be commodities x edges")
        if any(x < 0 for row in flows for x in row):
            raise InputError("flows must be nonnegative")
        D = incidence_matrix(inst.graph)
        for k in range(l):
            net = D.apply(IntVector(flows[k]))
            if net.entries != inst.demands[k]:
                raise InputError(f"demand violated for commodity {k}")
        loads = tuple(sum(flows[k][e] for k in range(l)) for e in range(t))
        if any(load > u for load, u in zip(loads, inst.capacities)):
            raise InputError("capacity violated")
        return cls(flows=flows, loads=loads, total_cost=inst.cost_of(flows))

    @classmethod
    def for_transportation(cls, inst: TransportationInstance, flows):
        flows = tuple(
            tuple(tuple(int(x) for x in cell) for cell in row) for row in flows
        )
        m, n, l = inst.suppliers, inst.consumers, inst.commodities
        if len(flows) != n or any(len(row) != m for row in flows) or any(
            len(cell) != l for row in flows for cell in row
        ):
            raise InputError("flow table must be consumers x suppliers x commodities")
        if any(x < 0 for row in flows for cell in row for x in cell):
            raise InputError("flows must be nonnegative")
        for i in range(m):
            for k in range(l):
                if sum(flows[j][i][k] for j in range(n)) != inst.supplies[i][k]:
                    raise InputError(f"supply violated at supplier {i}")
        for j in range(n):
            for k in range(l):
                if sum(flows[j][i][k] for i in range(m)) != inst.consumptions[j][k]:
                    raise InputError(f"consumption violated at consumer {j}")
        loads = tuple(
            tuple(
                sum(inst.volumes[k] * flows[j][i][k] for k in range(l))
                for j in range(n)
            )
            for i in range(m)
        )
        for i in range(m):
            for j in range(n):
                if loads[i][j] > inst.capacities[i][j]:
                    raise InputError(f"capacity violated on edge ({i},{j})")
        return cls(flows=flows, loads=loads, total_cost=inst.cost_of(flows))


@dataclass
class FlowResult:
    status: str
    solution: Optional[FlowSolution]
    report: Optional[SolveReport] = None


# ---------------------------------------------------------------------------
# Encodings
# ---------------------------------------------------------------------------

def encode_transshipment_slack(inst: TransshipmentInstance):
    """(program, objective) with an extra slack block: variables are
    (x^0, x^1, ..., x^l), the top rows force sum_k x^k = u, and block k
    carries the demand equations of commodity k (block 0 the residual
    demand D*u - sum_k d^k)."""
    D = incidence_matrix(inst.graph)
    t, s, l = inst.graph.edge_count, inst.graph.vertex_count, inst.commodities
    A = Bimatrix(IntMatrix.identity(t), D)
    u = IntVector(inst.capacities)
    d0 = D.apply(u)
    for row in inst.demands:
        d0 = d0 - IntVector(row)
    b_entries = list(inst.capacities) + list(d0.entries)
    for row in inst.demands:
        b_entries.extend(row)
    n = l + 1
    program = NFoldProgram(
        A, n, IntVector(b_entries),
        lower=(0,) * (n * t), upper=(None,) * (n * t),
    )
    terms = [
        ShiftedTerm(inst.edge_costs[e], shift=inst.capacities[e], negate=True)
        for e in range(t)
    ]
    for k in range(l):
        terms.extend(inst.commodity_edge_costs[k])
    return program, SeparableConvexObjective(terms)


def encode_transshipment_generalized(inst: TransshipmentInstance) -> GeneralizedNFoldProgram:
    """l blocks of edge flows; demand equations per block, combined load
    bounded by capacity through the window rows."""
    D = incidence_matrix(inst.graph)
    t, l = inst.graph.edge_count, inst.commodities
    A = Bimatrix(IntMatrix.zeros(0, t), D)
    W = Bimatrix(IntMatrix.identity(t), IntMatrix.zeros(0, t))
    b_entries = []
    for row in inst.demands:
        b_entries.extend(row)
    g_terms = []
    for k in range(l):
        g_terms.extend(inst.commodity_edge_costs[k])
    return GeneralizedNFoldProgram(
        A, W, l, IntVector(b_entries),
        lower=(0,) * (l * t), upper=(None,) * (l * t),
        w_lower=(0,) * t, w_upper=tuple(inst.capacities),
        f=SeparableConvexObjective(inst.edge_costs),
        g=SeparableConvexObjective(g_terms),
    )


def encode_transportation(inst: TransportationInstance) -> GeneralizedNFoldProgram:
    """Consumers as blocks: x^j lists (supplier, commodity) flows; the top
    identity rows add supplies, block rows add consumptions, and the window
    rows carry volume-weighted loads per edge."""
    m, n, l = inst.suppliers, inst.consumers, inst.commodities
    ml = m * l
    d_sum = IntMatrix(l, ml, [
        1 if c % l == r else 0 for r in range(l) for c in range(ml)
    ])
    A = Bimatrix(IntMatrix.identity(ml), d_sum)
    v_blocks = IntMatrix(m, ml, [
        inst.volumes[c % l] if c // l == r else 0
        for r in range(m)
        for c in range(ml)
    ])
    W = Bimatrix(IntMatrix.zeros(0, ml), v_blocks)
    b_entries = [x for row in inst.supplies for x in row]
    for row in inst.consumptions:
        b_entries.extend(row)
    w_upper = tuple(
        inst.capacities[i][j] for j in range(n) for i in range(m)
    )
    f_terms = [
        inst.edge_costs[i][j] for j in range(n) for i in range(m)
    ]
    g_terms = [
        inst.commodity_edge_costs[j][i][k]
        for j in range(n)
        for i in range(m)
        for k in range(l)
    ]
    return GeneralizedNFoldProgram(
        A, W, n, IntVector(b_entries),
        lower=(0,) * (n * ml), upper=(None,) * (n * ml),
        w_lower=(0,) * (n * m), w_upper=w_upper,
        f=SeparableConvexObjective(f_terms),
        g=SeparableConvexObjective(g_terms),
    )


def decode(inst, solution: IntVector, encoding: str) -> FlowSolution:
    """Map a program solution back to flows, revalidating every instance
    constraint; violations signal an encoder/solver bug."""
    if isinstance(inst, TransportationInstance):
        if encoding != "transportation":
            raise InputError("transportation instances use the transportation encoding")
        m, n, l = inst.suppliers, inst.consumers, inst.commodities
        e = solution.entries
        if len(e) != n * m * l:
            raise InputError("solution dimension mismatch")
        flows = tuple(
            tuple(
                tuple(e[j * m * l + i * l + k] for k in range(l))
                for i in range(m)
            )
            for j in range(n)
        )
        return FlowSolution.for_transportation(inst, flows)

    t, l = inst.graph.edge_count, inst.commodities
    e = solution.entries
    if encoding == "slack":
        if len(e) != (l + 1) * t:
            raise InputError("solution dimension mismatch")
        slack = e[:t]
        flows = tuple(e[(k + 1) * t : (k + 2) * t] for k in range(l))
        sol = FlowSolution.for_transshipment(inst, flows)
        expect_slack = tuple(
            u - load for u, load in zip(inst.capacities, sol.loads)
        )
        if tuple(slack) != expect_slack:
            raise InputError("slack block inconsistent with combined loads")
        return sol
    if encoding == "generalized":
        if len(e) != l * t:
            raise InputError("solution dimension mismatch")
        flows = tuple(e[k * t : (k + 1) * t] for k in range(l))
        return FlowSolution.for_transshipment(inst, flows)
    raise InputError(f"unknown encoding {encoding!r}")


# ---------------------------------------------------------------------------
# Exact enumeration (feasibility finder and oracle)
# ---------------------------------------------------------------------------

def _compositions(limit_sum, per_var_limits):
    """All tuples 0 <= x_k <= per_var_limits[k] with sum(x) <= limit_sum,
    in lexicographic order."""
    l = len(per_var_limits)
    out = []
    cur = [0] * l

    def rec(k, left):
        if k == l:
            out.append(tuple(cur))
            return
        top = min(per_var_limits[k], left)
        for v in range(top + 1):
            cur[k] = v
            rec(k + 1, left - v)
        cur[k] = 0

    rec(0, limit_sum)
    return out


class _TransshipmentSearch:
    """Edge-major DFS over joint commodity assignments with per-vertex
    interval pruning; exact (pruning is a relaxation)."""

    def __init__(self, inst: TransshipmentInstance, deadline=None,
                 node_cap=50_000_000):
        self.inst = inst
        self.l = inst.commodities
        self.t = inst.graph.edge_count
        self.s = inst.graph.vertex_count
        self.edges = [(a - 1, b - 1) for a, b in inst.graph.edges]
        self.u = inst.capacities
        self.deadline = deadline
        self.node_cap = node_cap
        self.nodes = 0
        # suffix capacities entering/leaving each vertex from edge e onward
        self.suf_in = [[0] * self.s for _ in range(self.t + 1)]
        self.suf_out = [[0] * self.s for _ in range(self.t + 1)]
        for e in range(self.t - 1, -1, -1):
            tail, head = self.edges[e]
            for v in range(self.s):
                self.suf_in[e][v] = self.suf_in[e + 1][v]
                self.suf_out[e][v] = self.suf_out[e + 1][v]
            self.suf_in[e][head] += self.u[e]
            self.suf_out[e][tail] += self.u[e]
        self.choices = [
            _compositions(self.u[e], [self.u[e]] * self.l) for e in range(self.t)
        ]
        # edge-wise admissible cost lower bounds for pruned minimization
        self.edge_min_cost = []
        for e in range(self.t):
            best = None
            for c in self.choices[e]:
                val = self._edge_cost(e, c)
                if best is None or val < best:
                    best = val
            self.edge_min_cost.append(best or 0)
        self.suffix_min_cost = [0] * (self.t + 1)
        for e in range(self.t - 1, -1, -1):
            self.suffix_min_cost[e] = self.suffix_min_cost[e + 1] + self.edge_min_cost[e]

    def _edge_cost(self, e, assignment):
        val = self.inst.edge_costs[e].value(sum(assignment))
        for k in range(self.l):
            val += self.inst.commodity_edge_costs[k][e].value(assignment[k])
        return val

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise BudgetExceededError("flow enumeration node cap reached")
        if self.deadline is not None and self.nodes % 2048 == 0:
            if time.monotonic() > self.deadline:
                raise BudgetExceededError("flow enumeration time budget reached")

    def _prune(self, e, acc, vertices):
        """After assigning edges < e, can every commodity still meet its
        demand at the given vertices?"""
        for v in vertices:
            cap_in = self.suf_in[e][v]
            cap_out = self.suf_out[e][v]
            pos_need = 0
            neg_need = 0
            for k in range(self.l):
                need = self.inst.demands[k][v] - acc[k][v]
                if need > cap_in or -need > cap_out:
                    return False
                if need > 0:
                    pos_need += need
                else:
                    neg_need -= need
            if pos_need > cap_in or neg_need > cap_out:
                return False
        return True

    def run(self, mode="min", prune_costs=True):
        """mode "first": first feasible flow table or None.
        mode "min": (best_cost, best_flows) exact, or None."""
        l, t = self.l, self.t
        acc = [[0] * self.s for _ in range(l)]
        flows = [[0] * t for _ in range(l)]
        if not self.inst.balanced():
            return None
        if not self._prune(0, acc, range(self.s)):
            return None
        best = {"cost": None, "flows": None}

        def rec(e, cost):
            self._tick()
            if e == t:
                if mode == "first":
                    return tuple(tuple(row) for row in flows)
                if best["cost"] is None or cost < best["cost"]:
                    best["cost"] = cost
                    best["flows"] = tuple(tuple(row) for row in flows)
                elif cost == best["cost"]:
                    cand = tuple(tuple(row) for row in flows)
                    if cand < best["flows"]:
                        best["flows"] = cand
                return None
            tail, head = self.edges[e]
            for assignment in self.choices[e]:
                if mode == "min" and prune_costs and best["cost"] is not None:
                    lower = cost + self._edge_cost(e, assignment) + self.suffix_min_cost[e + 1]
                    if lower > best["cost"]:
                        continue
                for k in range(l):
                    xk = assignment[k]
                    acc[k][tail] -= xk
                    acc[k][head] += xk
                    flows[k][e] = xk
                if self._prune(e + 1, acc, (tail, head)):
                    hit = rec(e + 1, cost + self._edge_cost(e, assignment))
                    if hit is not None:
                        return hit
                for k in range(l):
                    xk = assignment[k]
                    acc[k][tail] += xk
                    acc[k][head] -= xk
                    flows[k][e] = 0
            return None

        hit = rec(0, 0)
        if mode == "first":
            return hit
        if best["cost"] is None:
            return None
        return best["cost"], best["flows"]


class _TransportationSearch:
    """Cell-major DFS (consumer blocks outer, suppliers inner) with margin
    pruning; exact."""

    def __init__(self, inst: TransportationInstance, deadline=None,
                 node_cap=50_000_000):
        self.inst = inst
        self.m, self.n, self.l = inst.suppliers, inst.consumers, inst.commodities
        self.deadline = deadline
        self.node_cap = node_cap
        self.nodes = 0
        m, n, l = self.m, self.n, self.l
        # cell capacity per commodity: volume-capped plus margins
        self.cell_cap = [
            [
                [
                    min(
                        inst.supplies[i][k],
                        inst.consumptions[j][k],
                        (inst.capacities[i][j] // inst.volumes[k])
                        if inst.volumes[k] > 0
                        else max(inst.supplies[i][k], 0),
                    )
                    for k in range(l)
                ]
                for i in range(m)
            ]
            for j in range(n)
        ]
        # max deliverable to supplier i, commodity k, from consumer j onward
        self.suf_sup = [
            [[0] * l for _ in range(m)] for _ in range(n + 1)
        ]
        for j in range(n - 1, -1, -1):
            for i in range(m):
                for k in range(l):
                    self.suf_sup[j][i][k] = (
                        self.suf_sup[j + 1][i][k] + self.cell_cap[j][i][k]
                    )

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise BudgetExceededError("flow enumeration node cap reached")
        if self.deadline is not None and self.nodes % 2048 == 0:
            if time.monotonic() > self.deadline:
                raise BudgetExceededError("flow enumeration time budget reached")

    def run(self, mode="min", prune_costs=True):
        inst = self.inst
        m, n, l = self.m, self.n, self.l
        if not inst.balanced():
            return None
        sup_used = [[0] * l for _ in range(m)]
        flows = [[[0] * l for _ in range(m)] for _ in range(n)]
        best = {"cost": None, "flows": None}

        def cell_cost(i, j, assignment):
            load = sum(inst.volumes[k] * assignment[k] for k in range(l))
            val = inst.edge_costs[i][j].value(load)
            for k in range(l):
                val += inst.commodity_edge_costs[j][i][k].value(assignment[k])
            return val

        def sup_ok(j, i):
            # supplier margins still reachable using cells from consumer j on,
            # excluding suppliers before i in the current consumer block
            for ii in range(m):
                start = j + 1 if ii <= i else j
                for k in range(l):
                    rest = self.suf_sup[start][ii][k] if start <= n else 0
                    need = inst.supplies[ii][k] - sup_used[ii][k]
                    if need < 0 or need > rest:
                        return False
            return True

        def rec(j, i, con_used, cost):
            self._tick()
            if j == n:
                if mode == "first":
                    return tuple(
                        tuple(tuple(cell) for cell in row) for row in flows
                    )
                if best["cost"] is None or cost < best["cost"]:
                    best["cost"] = cost
                    best["flows"] = tuple(
                        tuple(tuple(cell) for cell in row) for row in flows
                    )
                elif cost == best["cost"]:
                    cand = tuple(tuple(tuple(cell) for cell in row) for row in flows)
                    if cand < best["flows"]:
                        best["flows"] = cand
                return None
            # enumerate assignments for cell (supplier i, consumer j)
            limits = [
                min(
                    self.cell_cap[j][i][k],
                    inst.supplies[i][k] - sup_used[i][k],
                    inst.consumptions[j][k] - con_used[k],
                )
                for k in range(l)
            ]
            for assignment in _compositions(sum(limits), limits):
                load = sum(inst.volumes[k] * assignment[k] for k in range(l))
                if load > inst.capacities[i][j]:
                    continue
                new_con = [con_used[k] + assignment[k] for k in range(l)]
                last_supplier = i == m - 1
                if last_supplier and any(
                    new_con[k] != inst.consumptions[j][k] for k in range(l)
                ):
                    continue
                for k in range(l):
                    sup_used[i][k] += assignment[k]
                flows[j][i] = list(assignment)
                if sup_ok(j, i):
                    c2 = cost + cell_cost(i, j, assignment)
                    ok_cost = True
                    if (
                        mode == "min"
                        and prune_costs
                        and best["cost"] is not None
                        and c2 > best["cost"]
                    ):
                        ok_cost = False
                    if ok_cost:
                        if last_supplier:
                            hit = rec(j + 1, 0, [0] * l, c2)
                        else:
                            hit = rec(j, i + 1, new_con, c2)
                        if hit is not None:
                            return hit
                for k in range(l):
                    sup_used[i][k] -= assignment[k]
                flows[j][i] = [0] * l
            return None

        hit = rec(0, 0, [0] * l, 0)
        if mode == "first":
            return hit
        if best["cost"] is None:
            return None
        return best["cost"], best["flows"]


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def solve_transshipment(inst: TransshipmentInstance, encoding: str = "generalized",
                        budget: Optional[Budget] = None) -> FlowResult:
    """Encode, solve by Graver augmentation, decode.  The feasibility phase
    is an exact bounded search over flow tables (capacities bound the box),
    so infeasibility detection is certified."""
    budget = budget or graver_mod.DEFAULT_BUDGET
    if encoding not in ("slack", "generalized"):
        raise InputError(f"unknown encoding {encoding!r}", field="encoding")
    if not inst.balanced():
        return FlowResult(status=INFEASIBLE, solution=None,
                          report=SolveReport(status=INFEASIBLE))
    deadline = budget.deadline()
    start_flows = _TransshipmentSearch(inst, deadline).run(mode="first")
    if start_flows is None:
        return FlowResult(status=INFEASIBLE, solution=None,
                          report=SolveReport(status=INFEASIBLE))

    if encoding == "slack":
        program, objective = encode_transshipment_slack(inst)
        t, l = inst.graph.edge_count, inst.commodities
        loads = [sum(start_flows[k][e] for k in range(l)) for e in range(t)]
        start_entries = [u - ld for u, ld in zip(inst.capacities, loads)]
        for k in range(l):
            start_entries.extend(start_flows[k])
        report = nfold_mod.solve(program, objective, budget,
                                 start=IntVector(start_entries))
    else:
        program = encode_transshipment_generalized(inst)
        start_entries = [x for row in start_flows for x in row]
        report = nfold_mod.solve_generalized(program, budget,
                                             start=IntVector(start_entries))
    if report.status != OPTIMAL:
        return FlowResult(status=report.status, solution=None, report=report)
    sol = decode(inst, report.solution, encoding)
    if encoding == "slack":
        # slack objective evaluates the edge terms at u - x0 = combined load
        assert report.objective_value == sol.total_cost
    else:
        assert report.objective_value == sol.total_cost
    return FlowResult(status=OPTIMAL, solution=sol, report=report)


def solve_transportation(inst: TransportationInstance,
                         budget: Optional[Budget] = None) -> FlowResult:
    budget = budget or graver_mod.DEFAULT_BUDGET
    if not inst.balanced():
        return FlowResult(status=INFEASIBLE, solution=None,
                          report=SolveReport(status=INFEASIBLE))
    deadline = budget.deadline()
    start_flows = _TransportationSearch(inst, deadline).run(mode="first")
    if start_flows is None:
        return FlowResult(status=INFEASIBLE, solution=None,
                          report=SolveReport(status=INFEASIBLE))
    program = encode_transportation(inst)
    m, l = inst.suppliers, inst.commodities
    start_entries = [
        start_flows[j][i][k]
        for j in range(inst.consumers)
        for i in range(m)
        for k in range(l)
    ]
    report = nfold_mod.solve_generalized(program, budget,
                                         start=IntVector(start_entries))
    if report.status != OPTIMAL:
        return FlowResult(status=report.status, solution=None, report=report)
    sol = decode(inst, report.solution, "transportation")
    assert report.objective_value == sol.total_cost
    return FlowResult(status=OPTIMAL, solution=sol, report=report)


# ---------------------------------------------------------------------------
# Oracle and universality matrix
# ---------------------------------------------------------------------------

@dataclass
class OracleResult:
    status: str
    objective_value: Optional[int] = None
    witness: Optional[tuple] = None


def brute_force_solve(target, box: Optional[int] = None,
                      budget: Optional[Budget] = None,
                      objective: Optional[SeparableConvexObjective] = None) -> OracleResult:
    """Exact minimum by exhaustive search.

    Flow instances enumerate feasible flow tables directly (the capacity
    box is implied); raw programs additionally need `box`, a cap on every
    |coordinate|, whenever their bounds leave the search space infinite.
    """
    budget = budget or graver_mod.DEFAULT_BUDGET
    deadline = budget.deadline()
    if isinstance(target, TransshipmentInstance):
        hit = _TransshipmentSearch(target, deadline).run(mode="min")
        if hit is None:
            return OracleResult(status=INFEASIBLE)
        cost, flows = hit
        return OracleResult(status=OPTIMAL, objective_value=cost, witness=flows)
    if isinstance(target, TransportationInstance):
        hit = _TransportationSearch(target, deadline).run(mode="min")
        if hit is None:
            return OracleResult(status=INFEASIBLE)
        cost, flows = hit
        return OracleResult(status=OPTIMAL, objective_value=cost, witness=flows)
    if isinstance(target, NFoldProgram):
        if objective is None:
            raise InputError("raw programs need an objective for the oracle")
        return _brute_force_program(
            target.matrix(), target.b, target.lower, target.upper,
            objective, None, None, None, box, deadline,
        )
    if isinstance(target, GeneralizedNFoldProgram):
        obj = _generalized_box_objective(target)
        return _brute_force_program(
            target.amatrix(), target.b, target.lower, target.upper,
            obj, target.wmatrix(), target.w_lower, target.w_upper, box, deadline,
        )
    raise InputError(f"oracle cannot handle {type(target).__name__}")


def _generalized_box_objective(p: GeneralizedNFoldProgram):
    def value(x_entries):
        wx = p.wmatrix().apply(IntVector(x_entries))
        return p.f._raw_value(wx.entries) + p.g._raw_value(x_entries)
    return value


def _brute_force_program(M, b, lower, upper, objective, Wm, w_lower, w_upper,
                         box, deadline):
    d = M.cols
    ranges = []
    for i in range(d):
        lo, hi = lower[i], upper[i]
        if lo is None:
            if box is None:
                raise InputError("unbounded program: the oracle needs a box")
            lo = -box
        if hi is None:
            if box is None:
                raise InputError("unbounded program: the oracle needs a box")
            hi = box
        if box is not None:
            lo, hi = max(lo, -box), min(hi, box)
        if lo > hi:
            return OracleResult(status=INFEASIBLE)
        ranges.append((lo, hi))

    evaluate = (
        objective if callable(objective) else lambda e: objective._raw_value(e)
    )
    best_val = None
    best_wit = None
    x = [r[0] for r in ranges]
    count = 0
    rows = [M.row(i) for i in range(M.rows)]
    rhs = b.entries

    def rec(j):
        nonlocal best_val, best_wit, count
        count += 1
        if count % 4096 == 0 and deadline is not None:
            if time.monotonic() > deadline:
                raise BudgetExceededError("oracle time budget reached")
        if j == d:
            for row, bb in zip(rows, rhs):
                if sum(a * v for a, v in zip(row, x)) != bb:
                    return
            if Wm is not None:
                wx = [sum(a * v for a, v in zip(Wm.row(i), x)) for i in range(Wm.rows)]
                for wv, wl, wu in zip(wx, w_lower, w_upper):
                    if wl is not None and wv < wl:
                        return
                    if wu is not None and wv > wu:
                        return
            val = evaluate(tuple(x))
            if best_val is None or val < best_val:
                best_val = val
                best_wit = tuple(x)
            return
        for v in range(ranges[j][0], ranges[j][1] + 1):
            x[j] = v
            rec(j + 1)
        x[j] = ranges[j][0]

    rec(0)
    if best_val is None:
        return OracleResult(status=INFEASIBLE)
    return OracleResult(status=OPTIMAL, objective_value=best_val, witness=best_wit)


def universal_matrix(n: int, l: int) -> IntMatrix:
    """The doubly-iterated special product of the 1x3 all-ones matrix:
    (3n + l(3+n)) rows, 3nl columns."""
    if n < 1 or l < 1:
        raise InputError("universal matrix needs n, l >= 1")
    return special_product(special_product(ONES_1x3, n), l)
