"""Exact network-flow kernels.

Capacities are ints, Fractions or :data:`INF`.  Before solving, finite
capacities are multiplied by the lcm of their denominators so the inner loops
run on Python ints; results are divided back on the way out.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, NamedTuple, Optional, Sequence

INF = math.inf

SOURCE = "s"
SINK = "t"


def security_node(i) -> tuple:
    return ("S", i)


def account_node(j) -> tuple:
    return ("A", j)


class Arc(NamedTuple):
    tail: Hashable
    head: Hashable
    cap: object  # int | Fraction | INF
    cost: int = 0


class NotMaximum(RuntimeError):
    pass


class UnboundedFlow(RuntimeError):
    pass


class FlowNetwork:
    """Directed network with designated source and sink node labels."""

    def __init__(self, source: Hashable = SOURCE, sink: Hashable = SINK):
        self.source = source
        self.sink = sink
        self.nodes: dict = {}
        self.arcs: list[Arc] = []
        self.add_node(source)
        self.add_node(sink)

    def add_node(self, label) -> int:
        if label not in self.nodes:
            self.nodes[label] = len(self.nodes)
        return self.nodes[label]

    def add_arc(self, tail, head, cap, cost: int = 0) -> int:
        if cap != INF:
            cap = Fraction(cap)
            if cap < 0:
                raise ValueError(f"negative capacity on {tail!r}->{head!r}")
        self.add_node(tail)
        self.add_node(head)
        self.arcs.append(Arc(tail, head, cap, cost))
        return len(self.arcs) - 1

    def arc_index(self) -> dict:
        return {(a.tail, a.head): k for k, a in enumerate(self.arcs)}

    def __repr__(self):
        return f"FlowNetwork({len(self.nodes)} nodes, {len(self.arcs)} arcs)"


@dataclass(frozen=True)
class ResidualCut:
    reachable: frozenset
    unreachable_securities: frozenset
    unreachable_accounts: frozenset


class _Residual:
    """Paired residual arcs: arc k of the network is 2k forward, 2k+1 back."""

    def __init__(self, net: FlowNetwork, flows: Optional[Sequence] = None):
        finite = [a.cap for a in net.arcs if a.cap != INF]
        if flows is not None:
            finite += list(flows)
        self.scale = math.lcm(1, *(Fraction(c).denominator for c in finite))
        n = len(net.nodes)
        self.adj = [[] for _ in range(n)]
        self.to = []
        self.res = []
        self.cost = []
        for k, a in enumerate(net.arcs):
            u, v = net.nodes[a.tail], net.nodes[a.head]
            cap = INF if a.cap == INF else int(a.cap * self.scale)
            x = 0 if flows is None else int(Fraction(flows[k]) * self.scale)
            self.to += [v, u]
            self.res += [cap - x, x]
            self.cost += [a.cost, -a.cost]
            self.adj[u].append(2 * k)
            self.adj[v].append(2 * k + 1)

    def flows(self) -> list[Fraction]:
        return [Fraction(self.res[2 * k + 1], self.scale)
                for k in range(len(self.res) // 2)]

    def reachable_from(self, s: int) -> list[bool]:
        seen = [False] * len(self.adj)
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in self.adj[u]:
                v = self.to[a]
                if self.res[a] > 0 and not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen


def _dinic(g: _Residual, s: int, t: int) -> int:
    total = 0
    n = len(g.adj)
    while True:
        level = [-1] * n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in g.adj[u]:
                v = g.to[a]
                if g.res[a] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[t] < 0:
            return total
        it = [0] * n

        def push(u, limit):
            if u == t:
                return limit
            adj = g.adj[u]
            while it[u] < len(adj):
                a = adj[it[u]]
                v = g.to[a]
                if g.res[a] > 0 and level[v] == level[u] + 1:
                    pushed = push(v, min(limit, g.res[a]))
                    if pushed:
                        g.res[a] -= pushed
                        g.res[a ^ 1] += pushed
                        return pushed
                it[u] += 1
            return 0

        while True:
            pushed = push(s, INF)
            if not pushed:
                break
            if pushed == INF:
                raise UnboundedFlow("source and sink joined by infinite arcs")
            total += pushed


def max_flow(net: FlowNetwork, initial: Optional[Sequence] = None
             ) -> tuple[Fraction, list[Fraction]]:
    """Maximum s-t flow by Dinic's blocking-flow method.

    Returns the flow value and one flow per arc of ``net``.  ``initial`` may
    seed the search with a feasible flow, which is then augmented.
    """
    g = _Residual(net, initial)
    s, t = net.nodes[net.source], net.nodes[net.sink]
    _dinic(g, s, t)
    flows = g.flows()
    value = _net_outflow(net, flows, net.source)
    return value, flows


def _net_outflow(net: FlowNetwork, flows, node) -> Fraction:
    out = Fraction(0)
    for a, x in zip(net.arcs, flows):
        if a.tail == node:
            out += x
        if a.head == node:
            out -= x
    return out


def residual_unreachable(net: FlowNetwork, flows: Sequence) -> ResidualCut:
    """Nodes not reachable from the source in the residual network.

    Security and account nodes are recognised by the ``("S", id)`` and
    ``("A", id)`` label convention.
    """
    g = _Residual(net, flows)
    seen = g.reachable_from(net.nodes[net.source])
    if seen[net.nodes[net.sink]]:
        raise NotMaximum("augmenting path to the sink exists")
    labels = list(net.nodes)
    reach = frozenset(lab for lab, ok in zip(labels, seen) if ok)
    unreachable = [lab for lab, ok in zip(labels, seen) if not ok]
    return ResidualCut(
        reachable=reach,
        unreachable_securities=frozenset(
            lab[1] for lab in unreachable
            if isinstance(lab, tuple) and lab[0] == "S"),
        unreachable_accounts=frozenset(
            lab[1] for lab in unreachable
            if isinstance(lab, tuple) and lab[0] == "A"),
    )


def _bellman_ford(g: _Residual, starts: list[int]) -> list:
    n = len(g.adj)
    dist = [None] * n
    for s in starts:
        dist[s] = 0
    for _ in range(n):
        changed = False
        for u in range(n):
            if dist[u] is None:
                continue
            for a in g.adj[u]:
                if g.res[a] > 0:
                    v = g.to[a]
                    d = dist[u] + g.cost[a]
                    if dist[v] is None or d < dist[v]:
                        dist[v] = d
                        changed = True
        if not changed:
            return dist
    raise ValueError("negative-cost cycle in residual network")


def min_cost_max_flow(net: FlowNetwork
                      ) -> tuple[Fraction, int, list[Fraction], dict]:
    """Minimum-cost maximum flow by successive shortest paths.

    Costs are arbitrary-precision integers and may be negative as long as the
    network has no negative cycle.  Returns ``(value, cost, flows,
    potentials)``; the potentials ``pi`` satisfy
    ``cost(u, v) + pi[u] - pi[v] >= 0`` on every residual arc of the result.
    """
    g = _Residual(net)
    s, t = net.nodes[net.source], net.nodes[net.sink]
    n = len(g.adj)
    dist0 = _bellman_ford(g, [s])
    big = max((abs(c) for c in g.cost), default=0) * n + 1
    pot = [d if d is not None else big for d in dist0]

    while True:
        dist = [None] * n
        prev = [-1] * n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d != dist[u]:
                continue
            for a in g.adj[u]:
                if g.res[a] > 0:
                    v = g.to[a]
                    nd = d + g.cost[a] + pot[u] - pot[v]
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        prev[v] = a
                        heapq.heappush(heap, (nd, v))
        if dist[t] is None:
            break
        top = max(d for d in dist if d is not None)
        for v in range(n):
            pot[v] += dist[v] if dist[v] is not None else top
        push = INF
        v = t
        while v != s:
            a = prev[v]
            push = min(push, g.res[a])
            v = g.to[a ^ 1]
        if push == INF:
            raise UnboundedFlow("source and sink joined by infinite arcs")
        v = t
        while v != s:
            a = prev[v]
            g.res[a] -= push
            g.res[a ^ 1] += push
            v = g.to[a ^ 1]

    flows = g.flows()
    value = _net_outflow(net, flows, net.source)
    cost = sum((x * a.cost for a, x in zip(net.arcs, flows)), Fraction(0))
    # Fresh potentials from a virtual root: valid on the final residual graph.
    dist = _bellman_ford(g, list(range(n)))
    potentials = {lab: dist[k] for lab, k in net.nodes.items()}
    return value, cost, flows, potentials


def reduced_cost(arc: Arc, potentials: dict) -> int:
    return arc.cost + potentials[arc.tail] - potentials[arc.head]
