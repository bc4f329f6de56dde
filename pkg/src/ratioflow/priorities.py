"""Priority classes on edges: lexicographic profile first, then balancing.

Class ``p`` edges cost ``-B**(P - p)`` per unit with ``B = 1 + sum(e)``, so
minimising cost maximises the per-class totals lexicographically.  Every
security also gets a zero-cost spill arc to the sink; a min-cost *maximum*
flow of that network is then a min-cost flow of the original one, which is
what the lexicographic order asks for (it need not be a maximum flow).

The optimal potentials split every arc into forced-empty, forced-full or
free.  Balancing runs the phase loop over that bounded network: a parameter
``lam`` is feasible when some cost-optimal flow gives each unfixed account at
least ``lam * e_j``; tight accounts are fixed at ``lam * e_j`` and the loop
continues until every account is fixed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .balancer import (QUERY_CONSTANT, InvariantError, phase_query_limit,
                       search_bound)
from .flows import (INF, SINK, SOURCE, FlowNetwork, account_node, max_flow,
                    min_cost_max_flow, security_node)
from .model import (BalanceReport, FlowAssignment, Instance, PhaseRecord,
                    inflows, mwsr_objective, risk_vector,
                    surplus_vector)
from .search import QueryBudget, least_upper_fraction


class MissingPriorities(ValueError):
    pass


@dataclass(frozen=True)
class PriorityWeights:
    base: int
    num_priorities: int

    @classmethod
    def for_instance(cls, inst: Instance) -> "PriorityWeights":
        return cls(1 + sum(inst.exposures.values()), inst.num_priorities)

    def weight(self, p: int) -> int:
        return self.base ** (self.num_priorities - p)


def priority_profile(inst: Instance, f: FlowAssignment) -> tuple:
    totals = [Fraction(0)] * inst.num_priorities
    for e in inst.edges:
        totals[e.priority - 1] += f[e.key]
    return tuple(totals)


def _spill_network(inst: Instance, weights: PriorityWeights) -> FlowNetwork:
    net = FlowNetwork()
    for i, v in inst.values.items():
        net.add_arc(SOURCE, security_node(i), v)
    for e in inst.edges:
        net.add_arc(security_node(e.security), account_node(e.account),
                    INF if e.cap is None else e.cap,
                    -weights.weight(e.priority))
    for j, ex in inst.exposures.items():
        net.add_arc(account_node(j), SINK, ex)
    for i, v in inst.values.items():
        net.add_arc(security_node(i), SINK, v)
    return net


def _require_priorities(inst: Instance):
    if not inst.edges or any(e.priority is None for e in inst.edges):
        raise MissingPriorities("every edge needs a priority")


def lex_optimal_profile(inst: Instance) -> tuple[tuple, dict]:
    """Lexicographically largest per-class flow totals and optimal potentials.

    Potentials are keyed by network node label (``"s"``, ``"t"``,
    ``("S", i)``, ``("A", j)``) and certify optimality of the spill network.
    """
    _require_priorities(inst)
    weights = PriorityWeights.for_instance(inst)
    net = _spill_network(inst, weights)
    _, _, flows, potentials = min_cost_max_flow(net)
    # Middle arcs follow the source arcs, in edge order.
    offset = len(inst.values)
    totals = [Fraction(0)] * inst.num_priorities
    for k, e in enumerate(inst.edges):
        totals[e.priority - 1] += flows[offset + k]
    return tuple(totals), potentials


def admissible_edges(inst: Instance, potentials: dict) -> set:
    """Edge keys whose arc has zero reduced cost under ``potentials``."""
    weights = PriorityWeights.for_instance(inst)
    out = set()
    for e in inst.edges:
        c = (-weights.weight(e.priority)
             + potentials[security_node(e.security)]
             - potentials[account_node(e.account)])
        if c == 0:
            out.add(e.key)
    return out


@dataclass
class _BoundedArc:
    tail: object
    head: object
    low: object
    high: object


class _OptimalFlows:
    """All cost-optimal flows of the spill network, as bounds on arcs."""

    def __init__(self, inst: Instance, potentials: dict):
        self.inst = inst
        weights = PriorityWeights.for_instance(inst)
        self.arcs: list[_BoundedArc] = []
        self.middle: dict = {}
        self.sink_bounds: dict = {}

        def bounds(cost, tail, head, cap):
            rc = cost + potentials[tail] - potentials[head]
            if rc > 0:
                return Fraction(0), Fraction(0)
            if rc < 0:
                if cap == INF:
                    raise InvariantError("negative reduced cost on an "
                                         "uncapacitated arc")
                return cap, cap
            return Fraction(0), cap

        for i, v in inst.values.items():
            self.arcs.append(_BoundedArc(SOURCE, security_node(i), v, v))
            lo, hi = bounds(0, security_node(i), SINK, Fraction(v))
            self.arcs.append(_BoundedArc(security_node(i), SINK, lo, hi))
        for e in inst.edges:
            cap = INF if e.cap is None else e.cap
            lo, hi = bounds(-weights.weight(e.priority),
                            security_node(e.security),
                            account_node(e.account), cap)
            self.middle[e.key] = len(self.arcs)
            self.arcs.append(_BoundedArc(security_node(e.security),
                                         account_node(e.account), lo, hi))
        for j, ex in inst.exposures.items():
            self.sink_bounds[j] = bounds(0, account_node(j), SINK,
                                         Fraction(ex))

    def solve(self, lam: Fraction, fixed: dict, active: list):
        """A feasible circulation at ``lam`` or ``None``.

        ``fixed`` maps accounts to their settled inflow; ``active`` accounts
        must receive at least ``lam * e_j``.
        """
        arcs = list(self.arcs)
        sink_arc = {}
        for j, (lo, hi) in self.sink_bounds.items():
            if j in fixed:
                lo2 = hi2 = fixed[j]
                if not lo <= lo2 <= hi:
                    return None
            else:
                lo2, hi2 = max(lo, lam * self.inst.exposures[j]), hi
                if lo2 > hi2:
                    return None
            sink_arc[j] = len(arcs)
            arcs.append(_BoundedArc(account_node(j), SINK, lo2, hi2))
        arcs.append(_BoundedArc(SINK, SOURCE, Fraction(0), INF))

        excess: dict = {}
        net = FlowNetwork("S*", "T*")
        slots = []
        for a in arcs:
            excess[a.head] = excess.get(a.head, 0) + a.low
            excess[a.tail] = excess.get(a.tail, 0) - a.low
            slack = a.high - a.low
            slots.append(net.add_arc(a.tail, a.head, slack) if slack > 0
                         else None)
        need = Fraction(0)
        for node, x in excess.items():
            if x > 0:
                net.add_arc("S*", node, x)
                need += x
            elif x < 0:
                net.add_arc(node, "T*", -x)
        value, flows = max_flow(net)
        if value != need:
            return None
        x = [a.low + (flows[k] if k is not None else 0)
             for a, k in zip(arcs, slots)]
        return arcs, x, sink_arc

    @staticmethod
    def reachable_from_sink(arcs, x) -> set:
        adj: dict = {}
        for a, f in zip(arcs, x):
            if f < a.high:
                adj.setdefault(a.tail, []).append(a.head)
            if f > a.low:
                adj.setdefault(a.head, []).append(a.tail)
        seen = {SINK}
        queue = deque([SINK])
        while queue:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen


def priority_balance_violations(inst: Instance, f: FlowAssignment,
                                potentials: dict) -> list[tuple]:
    """Violations ``(i, j, l)`` among the lexicographically optimal flows.

    Moving flow on security ``i`` from account ``j`` to a worse-covered
    account ``l`` is only an option when it keeps the flow optimal, that is
    when both edges and both accounts' sink arcs stay inside the bounds that
    ``potentials`` impose.
    """
    opt = _OptimalFlows(inst, potentials)
    y = inflows(inst, f)
    r = risk_vector(inst, f)
    bad = []
    for e in inst.edges:
        arc = opt.arcs[opt.middle[e.key]]
        if f[e.key] <= arc.low or y[e.account] <= opt.sink_bounds[e.account][0]:
            continue
        for other in inst.edges_of_security(e.security):
            if other.key == e.key:
                continue
            arc2 = opt.arcs[opt.middle[other.key]]
            if f[other.key] >= arc2.high:
                continue
            if y[other.account] >= opt.sink_bounds[other.account][1]:
                continue
            if r[e.account] < r[other.account]:
                bad.append((e.security, e.account, other.account))
    return bad


def balance_with_priorities(inst: Instance, c: int = QUERY_CONSTANT
                            ) -> BalanceReport:
    """Ratio-balanced flow among the lexicographically optimal ones."""
    _require_priorities(inst)
    profile, potentials = lex_optimal_profile(inst)
    opt = _OptimalFlows(inst, potentials)
    bound = search_bound(inst)
    fixed: dict = {}
    active = list(inst.exposures)
    phases: list[PhaseRecord] = []
    recorded_s: set = set()
    queries = 0
    last = None

    while active:
        budget = QueryBudget(bound, phase_query_limit(bound, c))
        cache: dict = {}

        def query(lam):
            if lam not in cache:
                budget.charge()
                cache[lam] = opt.solve(lam, fixed, active)
            return cache[lam]

        if query(Fraction(1)) is not None:
            lam = Fraction(1)
        else:
            x, below = least_upper_fraction(
                lambda q: query(1 - q) is not None, bound)
            lam = 1 - x
            if query(lam) is None or query(1 - below) is not None:
                raise InvariantError(f"threshold search inconsistent at "
                                     f"lambda={lam}")
        queries += budget.queries_used
        arcs, x, sink_arc = cache[lam]
        reach = opt.reachable_from_sink(arcs, x)
        tight = []
        for j in active:
            a = sink_arc[j]
            y = x[a]
            if y != lam * inst.exposures[j]:
                continue
            if y < arcs[a].high and account_node(j) in reach:
                continue
            tight.append(j)
        if not tight:
            raise InvariantError(f"no tight account at lambda={lam}")
        if phases and lam <= phases[-1].lam:
            raise InvariantError("lambda did not increase")
        for j in tight:
            fixed[j] = lam * inst.exposures[j]
        active = [j for j in active if j not in fixed]
        if active:
            tight_s = {i for i in inst.values
                       if security_node(i) not in reach} - recorded_s
        else:
            tight_s = set(inst.values) - recorded_s
        recorded_s |= tight_s
        phases.append(PhaseRecord(len(phases) + 1, lam, frozenset(tight_s),
                                  frozenset(tight)))
        last = (arcs, x)

    arcs, x = last
    flow = FlowAssignment({e.key: x[opt.middle[e.key]] for e in inst.edges})
    got = priority_profile(inst, flow)
    if got != profile:
        raise InvariantError(f"profile {got} differs from optimum {profile}")
    return BalanceReport(flow=flow, surplus=surplus_vector(inst, flow),
                         risk_ratio=risk_vector(inst, flow), phases=phases,
                         objective=mwsr_objective(inst, flow),
                         priority_profile=profile, queries=queries)


def eval_priority_objective(inst: Instance, f: FlowAssignment, eps
                            ) -> Fraction:
    """``-sum_p eps**p F_p + eps**(P+1) * sum_j e_j r_j**2`` (exact)."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    _require_priorities(inst)
    P = inst.num_priorities
    totals = priority_profile(inst, f)
    linear = -sum((eps ** (p + 1) * t for p, t in enumerate(totals)),
                  Fraction(0))
    return linear + eps ** (P + 1) * mwsr_objective(inst, f)
