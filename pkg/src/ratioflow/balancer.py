"""Ratio-balanced maximum flow by parametric max-flow phases.

For a parameter ``lam`` the network ``P_lam`` has source arcs ``v_i``, sink
arcs ``lam * e_j`` and the eligibility edges in between.  ``P_lam`` is
feasible when a maximum flow saturates every sink arc.  Each phase finds the
largest feasible ``lam``, peels off the nodes cut off from the source in the
residual network, and repeats on what is left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .flows import (INF, SINK, SOURCE, FlowNetwork, ResidualCut,
                    account_node, max_flow, residual_unreachable,
                    security_node)
from .model import (BalanceReport, FlowAssignment, Instance, PhaseRecord,
                    mwsr_objective, risk_vector, surplus_vector)
from .search import BudgetExceeded, QueryBudget, least_upper_fraction

STANDARD = "standard"
OVER_COVERAGE = "over_coverage"

QUERY_CONSTANT = 3


class LambdaOutOfRange(ValueError):
    pass


class InvariantError(AssertionError):
    """An internal consistency check failed; indicates a bug."""


def search_bound(inst: Instance) -> int:
    """Bound on numerators and denominators of every phase parameter."""
    if not inst.has_caps:
        return max(inst.n * inst.M, 1)
    finite = sum(e.cap for e in inst.edges if e.cap is not None)
    return max(int(sum(inst.values.values()) + finite),
               sum(inst.exposures.values()), 1)


def phase_query_limit(bound: int, c: int = QUERY_CONSTANT) -> int:
    return c * math.ceil(math.log2(2 * bound * bound))


class LambdaQueryBudget(QueryBudget):
    """Per-phase oracle budget ``c * ceil(log2(2 N^2))``."""

    def __init__(self, bound: int, c: int = QUERY_CONSTANT):
        super().__init__(bound, phase_query_limit(bound, c))


def build_p_lambda(inst: Instance, lam, mode: str = STANDARD) -> FlowNetwork:
    lam = Fraction(lam)
    if mode == STANDARD and not 0 <= lam <= 1:
        raise LambdaOutOfRange(f"lambda {lam} outside [0, 1]")
    if mode == OVER_COVERAGE and lam < 1:
        raise LambdaOutOfRange(f"lambda {lam} below 1 in over-coverage mode")
    if mode not in (STANDARD, OVER_COVERAGE):
        raise ValueError(f"unknown mode {mode!r}")
    net = FlowNetwork()
    for i, v in inst.values.items():
        net.add_arc(SOURCE, security_node(i), v)
    for e in inst.edges:
        net.add_arc(security_node(e.security), account_node(e.account),
                    INF if e.cap is None else e.cap)
    for j, ex in inst.exposures.items():
        net.add_arc(account_node(j), SINK, lam * ex)
    return net


@dataclass
class Feasibility:
    feasible: bool
    lam: Fraction
    net: FlowNetwork
    flows: list
    cut: Optional[ResidualCut]

    def edge_flows(self) -> dict:
        out = {}
        for a, x in zip(self.net.arcs, self.flows):
            if a.tail[0] == "S" and a.head != SINK:
                out[(a.tail[1], a.head[1])] = x
        return out


def is_feasible(inst: Instance, lam, mode: str = STANDARD) -> Feasibility:
    """Max flow of ``P_lam`` and whether it saturates all sink arcs."""
    lam = Fraction(lam)
    net = build_p_lambda(inst, lam, mode)
    value, flows = max_flow(net)
    demand = lam * sum(inst.exposures.values())
    cut = residual_unreachable(net, flows)
    return Feasibility(value == demand, lam, net, flows, cut)


def find_lambda(inst: Instance, mode: str = STANDARD,
                budget: Optional[QueryBudget] = None) -> Feasibility:
    """Largest feasible parameter of ``inst``, with its max flow and cut.

    Standard mode searches ``x = 1 - lam`` in ``[0, 1]``; over-coverage mode
    searches ``x = 1 / lam`` so that ``lam`` ranges over ``[1, inf)``.
    """
    if budget is None:
        budget = LambdaQueryBudget(search_bound(inst))
    cache: dict = {}

    def query(lam: Fraction) -> Feasibility:
        if lam not in cache:
            budget.charge()
            cache[lam] = is_feasible(inst, lam, mode)
        return cache[lam]

    if mode == STANDARD:
        to_lam = lambda x: 1 - x  # noqa: E731
        if query(Fraction(1)).feasible:
            return cache[Fraction(1)]
    else:
        to_lam = lambda x: 1 / x  # noqa: E731

    x, below = least_upper_fraction(lambda q: query(to_lam(q)).feasible,
                                    budget.bound)
    best = query(to_lam(x))
    # x = 0 is excluded in over-coverage mode (lam = inf is never feasible).
    above = query(to_lam(below)) if below > 0 or mode == STANDARD else None
    if not best.feasible or (above is not None and above.feasible):
        raise InvariantError(
            f"threshold search inconsistent at lambda={best.lam} "
            f"(bound {budget.bound})")
    return best


def _finish(inst: Instance, flow: FlowAssignment, phases: list,
            queries: int) -> BalanceReport:
    s = surplus_vector(inst, flow)
    r = risk_vector(inst, flow)
    return BalanceReport(flow=flow, surplus=s, risk_ratio=r, phases=phases,
                         objective=mwsr_objective(inst, flow),
                         queries=queries)


def phase_decompose(inst: Instance, c: int = QUERY_CONSTANT) -> BalanceReport:
    """Ratio-balanced maximum flow of ``inst`` with its phase structure."""
    if inst.num_priorities:
        raise ValueError("instance carries priorities; use "
                         "balance_with_priorities")
    flow, phases, queries = _peel(inst, STANDARD, c)
    return _finish(inst, flow, phases, queries)


def _peel(inst: Instance, mode: str, c: int):
    bound = search_bound(inst)
    secs = list(inst.values)
    accs = list(inst.exposures)
    # Value still available per security; capped edges into tight accounts
    # may draw on securities that stay for later phases.
    left = {i: Fraction(v) for i, v in inst.values.items()}
    flow: dict = {e.key: Fraction(0) for e in inst.edges}
    phases: list[PhaseRecord] = []
    queries = 0
    while accs:
        k = len(phases) + 1
        if not secs:
            if mode != STANDARD:
                raise InvariantError("accounts left without securities")
            phases.append(PhaseRecord(k, Fraction(0), frozenset(),
                                      frozenset(accs)))
            break
        sub = inst.restrict(secs, accs, values=left)
        budget = QueryBudget(bound, phase_query_limit(bound, c))
        res = find_lambda(sub, mode, budget)
        queries += budget.queries_used
        if mode == STANDARD and res.lam == 1:
            tight_s, tight_a = set(secs), set(accs)
        else:
            tight_s = set(res.cut.unreachable_securities)
            tight_a = set(res.cut.unreachable_accounts)
        if not tight_a:
            raise InvariantError(f"phase {k}: empty tight account set")
        if phases and res.lam <= phases[-1].lam:
            raise InvariantError(f"phase {k}: lambda did not increase")
        factor = Fraction(1, sub.scale // inst.scale)
        for (i, j), x in res.edge_flows().items():
            if j in tight_a:
                flow[(i, j)] = x * factor
                if i not in tight_s:
                    left[i] -= x * factor
            elif i in tight_s and x:
                raise InvariantError(f"phase {k}: tight security {i!r} "
                                     f"feeds a later account")
        if mode == STANDARD and res.lam < 1 and not inst.has_caps:
            closed = (Fraction(sum(inst.values[i] for i in tight_s))
                      / sum(inst.exposures[j] for j in tight_a))
            if closed != res.lam:
                raise InvariantError(
                    f"phase {k}: lambda {res.lam} != tight-set ratio {closed}")
        phases.append(PhaseRecord(k, res.lam, frozenset(tight_s),
                                  frozenset(tight_a)))
        secs = [i for i in secs if i not in tight_s]
        accs = [j for j in accs if j not in tight_a]
    return FlowAssignment(flow), phases, queries


class NoFullyCovered(Exception):
    pass


def over_coverage_pass(inst: Instance, report: BalanceReport,
                       c: int = QUERY_CONSTANT) -> BalanceReport:
    """Spread leftover security value over the fully covered accounts.

    The base report is returned with ``over_coverage`` set to the augmented
    assignment (accounts outside the covered set keep their base flow) and
    the list of phases with ``lam >= 1``.  Without fully covered accounts
    the report is returned unchanged.
    """
    covered = [j for j, r in report.risk_ratio.items() if r == 0]
    if not covered:
        return report
    cov = set(covered)
    base = report.flow
    caps = {}
    for i, v in inst.values.items():
        elsewhere = sum((x for (s, j), x in base.flow.items()
                         if s == i and j not in cov), Fraction(0))
        cap = v - elsewhere
        if cap > 0 and any(inst.has_edge(i, j) for j in covered):
            caps[i] = cap
    sub = inst.restrict(list(caps), covered, values=caps)
    sub_flow, phases, queries = _peel(sub, OVER_COVERAGE, c)
    factor = Fraction(inst.scale, sub.scale)
    merged = {k: x for k, x in base.flow.items() if k[1] not in cov}
    for e in inst.edges:
        if e.account in cov:
            merged[e.key] = sub_flow[e.key] * factor
    report.over_coverage = (FlowAssignment(merged, over_coverage=True),
                            phases)
    report.queries += queries
    return report


def balance(inst: Instance, over_coverage: bool = False) -> BalanceReport:
    """Convenience entry point: phases, then the optional over-coverage pass."""
    report = phase_decompose(inst)
    if over_coverage:
        report = over_coverage_pass(inst, report)
    return report


__all__ = [
    "BudgetExceeded", "Feasibility", "InvariantError", "LambdaOutOfRange",
    "LambdaQueryBudget", "NoFullyCovered", "OVER_COVERAGE", "STANDARD",
    "balance", "build_p_lambda", "find_lambda", "is_feasible",
    "over_coverage_pass", "phase_decompose", "search_bound",
]
