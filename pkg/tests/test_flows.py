import itertools
import random
from fractions import Fraction

import pytest

from ratioflow.flows import (INF, SINK, SOURCE, FlowNetwork, NotMaximum,
                             UnboundedFlow, account_node, max_flow,
                             min_cost_max_flow, reduced_cost,
                             residual_unreachable, security_node)


def random_network(rng, nodes=5, p=0.4, costs=False):
    net = FlowNetwork()
    inner = list(range(nodes))
    labels = [SOURCE, *inner, SINK]
    for u, v in itertools.permutations(labels, 2):
        if u == SINK or v == SOURCE or rng.random() > p:
            continue
        cap = Fraction(rng.randint(0, 12), rng.choice([1, 1, 2, 3]))
        net.add_arc(u, v, cap, rng.randint(0, 9) if costs else 0)
    return net, inner


def min_cut(net, inner):
    best = None
    for k in range(len(inner) + 1):
        for side in itertools.combinations(inner, k):
            left = {SOURCE, *side}
            cut = sum((a.cap for a in net.arcs
                       if a.tail in left and a.head not in left), Fraction(0))
            best = cut if best is None else min(best, cut)
    return best


def conservation_ok(net, flows):
    bal = {}
    for a, x in zip(net.arcs, flows):
        if not 0 <= x <= a.cap:
            return False
        bal[a.tail] = bal.get(a.tail, 0) - x
        bal[a.head] = bal.get(a.head, 0) + x
    return all(b == 0 for lab, b in bal.items() if lab not in (SOURCE, SINK))


@pytest.mark.parametrize("seed", range(40))
def test_max_flow_equals_min_cut(seed):
    net, inner = random_network(random.Random(seed))
    value, flows = max_flow(net)
    assert conservation_ok(net, flows)
    assert value == min_cut(net, inner)


def test_max_flow_from_initial_flow():
    net = FlowNetwork()
    net.add_arc(SOURCE, "a", 2)
    net.add_arc(SOURCE, "b", 2)
    net.add_arc("a", SINK, 2)
    net.add_arc("b", SINK, 1)
    value, flows = max_flow(net, initial=[1, 0, 1, 0])
    assert value == 3
    assert flows[0] == 2


def test_infinite_middle_arcs():
    net = FlowNetwork()
    net.add_arc(SOURCE, security_node(1), 5)
    net.add_arc(security_node(1), account_node(1), INF)
    net.add_arc(account_node(1), SINK, Fraction(7, 2))
    value, _ = max_flow(net)
    assert value == Fraction(7, 2)


def test_unbounded_flow_detected():
    net = FlowNetwork()
    net.add_arc(SOURCE, SINK, INF)
    with pytest.raises(UnboundedFlow):
        max_flow(net)


def test_residual_unreachable_labels():
    net = FlowNetwork()
    net.add_arc(SOURCE, security_node(1), 1)
    net.add_arc(SOURCE, security_node(2), 5)
    net.add_arc(security_node(1), account_node(1), INF)
    net.add_arc(security_node(2), account_node(2), INF)
    net.add_arc(account_node(1), SINK, 3)
    net.add_arc(account_node(2), SINK, 2)
    _, flows = max_flow(net)
    cut = residual_unreachable(net, flows)
    assert cut.unreachable_securities == {1}
    assert cut.unreachable_accounts == {1}
    assert security_node(2) in cut.reachable


def test_residual_unreachable_rejects_non_maximum():
    net = FlowNetwork()
    net.add_arc(SOURCE, SINK, 1)
    with pytest.raises(NotMaximum):
        residual_unreachable(net, [0])


def residual_has_negative_cycle(net, flows):
    arcs = []
    for a, x in zip(net.arcs, flows):
        if x < a.cap:
            arcs.append((a.tail, a.head, a.cost))
        if x > 0:
            arcs.append((a.head, a.tail, -a.cost))
    dist = {lab: 0 for lab in net.nodes}
    for _ in range(len(dist)):
        changed = False
        for u, v, c in arcs:
            if dist[u] + c < dist[v]:
                dist[v] = dist[u] + c
                changed = True
        if not changed:
            return False
    return True


@pytest.mark.parametrize("seed", range(40))
def test_min_cost_max_flow_optimality(seed):
    net, inner = random_network(random.Random(1000 + seed), costs=True)
    value, cost, flows, pot = min_cost_max_flow(net)
    assert conservation_ok(net, flows)
    assert value == min_cut(net, inner)
    assert cost == sum(x * a.cost for a, x in zip(net.arcs, flows))
    assert not residual_has_negative_cycle(net, flows)
    for a, x in zip(net.arcs, flows):
        if x < a.cap:
            assert reduced_cost(a, pot) >= 0
        if x > 0:
            assert reduced_cost(a, pot) <= 0


def test_min_cost_prefers_cheap_path():
    net = FlowNetwork()
    net.add_arc(SOURCE, "a", 1, 0)
    net.add_arc("a", "x", 1, 5)
    net.add_arc("a", "y", 1, -2)
    net.add_arc("x", SINK, 1)
    net.add_arc("y", SINK, 1)
    value, cost, flows, _ = min_cost_max_flow(net)
    assert value == 1 and cost == -2
    assert flows[2] == 1
