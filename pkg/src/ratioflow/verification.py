"""Independent checks of balanced flows.

Nothing here calls the phase algorithm.  The subset oracle recomputes the risk
vector from scratch by enumerating account sets.  The probes compare the
objective, in its direct and its matrix form, against random feasible flows.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .model import FlowAssignment, Instance, inflows, mwsr_objective


class TooLarge(ValueError):
    pass


def check_ratio_balance(inst: Instance, f: FlowAssignment,
                        admissible: Optional[set] = None,
                        tol=0) -> list[tuple]:
    """Violations ``(i, j, l)`` of: ``f_ij > 0`` and ``il`` usable => ``r_j >= r_l``.

    An edge ``il`` is usable unless it sits at its cap or, when
    ``admissible`` is given, lies outside that set of edge keys.  A positive
    ``tol`` only reports pairs with ``r_j < r_l - tol``, which is meant for
    rounded output of floating-point solvers.
    """
    tol = Fraction(tol)
    y = inflows(inst, f)
    r = {j: (inst.exposures[j] - y[j]) / inst.exposures[j] for j in y}
    by_security: dict = {}
    for e in inst.edges:
        by_security.setdefault(e.security, []).append(e)
    bad = []
    for e in inst.edges:
        if f[e.key] <= 0 or (admissible is not None
                             and e.key not in admissible):
            continue
        for other in by_security[e.security]:
            if other is e:
                continue
            if admissible is not None and other.key not in admissible:
                continue
            if other.cap is not None and f[other.key] >= other.cap:
                continue
            if r[e.account] < r[other.account] - tol:
                bad.append((e.security, e.account, other.account))
    return bad


def _residual_adjacency(inst: Instance, f: FlowAssignment) -> dict:
    out = {}
    for i in inst.values:
        out[i] = f.outflow(i)
    y = inflows(inst, f)
    adj: dict = {"s": [], "t": []}
    for i, v in inst.values.items():
        adj.setdefault(("S", i), [])
        if out[i] < v:
            adj["s"].append((("S", i), v - out[i]))
        if out[i] > 0:
            adj[("S", i)].append(("s", out[i]))
    for e in inst.edges:
        x = f[e.key]
        u, w = ("S", e.security), ("A", e.account)
        adj.setdefault(u, [])
        adj.setdefault(w, [])
        if e.cap is None or x < e.cap:
            adj[u].append((w, None if e.cap is None else e.cap - x))
        if x > 0:
            adj[w].append((u, x))
    for j, ex in inst.exposures.items():
        w = ("A", j)
        adj.setdefault(w, [])
        if y[j] < ex:
            adj[w].append(("t", ex - y[j]))
        if y[j] > 0:
            adj["t"].append((w, y[j]))
    return adj


def _augmenting_path(inst: Instance, f: FlowAssignment):
    adj = _residual_adjacency(inst, f)
    prev = {"s": None}
    queue = deque(["s"])
    while queue:
        u = queue.popleft()
        if u == "t":
            break
        for v, cap in adj[u]:
            if v not in prev:
                prev[v] = (u, cap)
                queue.append(v)
    if "t" not in prev:
        return None
    path, node = [], "t"
    while prev[node] is not None:
        u, cap = prev[node]
        path.append((u, node, cap))
        node = u
    return path[::-1]


def check_maximality(inst: Instance, f: FlowAssignment) -> Optional[list]:
    """``None`` if ``f`` is a maximum flow, otherwise an augmenting path.

    The path is a list of residual arcs ``(u, v, residual)`` between node
    labels ``"s"``, ``("S", i)``, ``("A", j)`` and ``"t"``.
    """
    return _augmenting_path(inst, f)


def augment_to_maximum(inst: Instance, f: FlowAssignment) -> FlowAssignment:
    """Shortest augmenting paths from ``f`` until it is a maximum flow."""
    flow = dict(f.flow)
    while True:
        path = _augmenting_path(inst, FlowAssignment(flow))
        if path is None:
            return FlowAssignment(flow)
        delta = min(cap for _, _, cap in path if cap is not None)
        for u, v, _ in path:
            if u[0] == "S" and v[0] == "A":
                key = (u[1], v[1])
                flow[key] = flow.get(key, Fraction(0)) + delta
            elif u[0] == "A" and v[0] == "S":
                key = (v[1], u[1])
                flow[key] = flow[key] - delta


def maximality_gap(inst: Instance, f: FlowAssignment) -> Fraction:
    """How much flow value is missing compared with a maximum flow."""
    return augment_to_maximum(inst, f).total() - f.total()


def _subset_sum(weights: list, mask: int) -> int:
    total, k = 0, 0
    while mask:
        if mask & 1:
            total += weights[k]
        mask >>= 1
        k += 1
    return total


def oracle_risk_vector(inst: Instance, limit: int = 15) -> dict:
    """Risk vector by enumerating every account subset.

    ``reach(B)``, the most value deliverable into account set ``B``, is
    ``sum_i min(v_i, sum_{j in B} c_ij)`` with uncapped edges counting as
    infinite.  Levels are peeled from the contracted function
    ``reach(C | U) - reach(U)``: the smallest ratio ``(...) / e(C)`` gives the
    next secured fraction and the union of its minimisers the next level.
    """
    accs = list(inst.exposures)
    if len(accs) > limit:
        raise TooLarge(f"{len(accs)} accounts exceed oracle limit {limit}")
    if inst.num_priorities:
        raise ValueError("oracle does not handle priorities")
    pos = {j: k for k, j in enumerate(accs)}
    exp = [inst.exposures[j] for j in accs]
    # Per security: (value, [(account bit, cap or None)]).
    secs = {i: [] for i in inst.values}
    for e in inst.edges:
        secs[e.security].append((1 << pos[e.account], e.cap))

    full = (1 << len(accs)) - 1
    reach = [0] * (full + 1)
    for mask in range(full + 1):
        total = Fraction(0)
        for i, nbrs in secs.items():
            inside = [cap for bit, cap in nbrs if mask & bit]
            if not inside:
                continue
            if any(cap is None for cap in inside):
                total += inst.values[i]
            else:
                total += min(Fraction(inst.values[i]), sum(inside))
        reach[mask] = total
    esum = [_subset_sum(exp, m) for m in range(full + 1)]

    risk = {}
    done = 0
    while done != full:
        rest = full & ~done
        best = None
        union = 0
        sub = rest
        while sub:
            ratio = Fraction(reach[sub | done] - reach[done], esum[sub])
            if best is None or ratio < best:
                best, union = ratio, sub
            elif ratio == best:
                union |= sub
            sub = (sub - 1) & rest
        if best >= 1:
            best, union = Fraction(1), rest
        for j in accs:
            if union & (1 << pos[j]):
                risk[j] = 1 - best
        done |= union
    return risk


@dataclass
class QpStandardForm:
    """``minimize 1/2 x'Px + q'x + constant`` subject to ``G x <= h``.

    Matrices are numpy object arrays of Fractions; ``edges`` gives the edge
    key of each column.
    """

    qp_P: np.ndarray
    q: np.ndarray
    G: np.ndarray
    h: np.ndarray
    K: np.ndarray
    V: np.ndarray
    constant: Fraction
    edges: list

    def objective(self, x) -> Fraction:
        """``1/2 x'Px + q'x + constant``, exact.

        Evaluated on integer numerators over common denominators, which is
        much faster than multiplying Fractions entry by entry.
        """
        x = [Fraction(v) for v in x]
        d = math.lcm(*(v.denominator for v in x)) if x else 1
        num = np.array([v.numerator * (d // v.denominator) for v in x],
                       dtype=object)
        p_int, p_den = self._integral("qp_P")
        q_int, q_den = self._integral("q")
        quad = Fraction(int(num.dot(p_int.dot(num))) if x else 0,
                        2 * p_den * d * d)
        lin = Fraction(int(q_int.dot(num)) if x else 0, q_den * d)
        return quad + lin + self.constant

    def _integral(self, name):
        cache = self.__dict__.setdefault("_int_cache", {})
        if name not in cache:
            a = getattr(self, name)
            den = math.lcm(*(Fraction(v).denominator for v in a.flat)) \
                if a.size else 1
            ints = np.empty(a.shape, dtype=object)
            for idx, v in np.ndenumerate(a):
                ints[idx] = Fraction(v).numerator * (den // Fraction(v).denominator)
            cache[name] = (ints, den)
        return cache[name]

    def as_float(self) -> dict:
        return {name: getattr(self, name).astype(float)
                for name in ("qp_P", "q", "G", "h", "K", "V")}


def _zeros(rows, cols=None) -> np.ndarray:
    shape = (rows,) if cols is None else (rows, cols)
    out = np.empty(shape, dtype=object)
    out.fill(Fraction(0))
    return out


def qp_standard_form(inst: Instance) -> QpStandardForm:
    """Quadratic program whose objective is ``sum_j e_j r_j**2``.

    Columns follow the instance's edge order.  ``G`` stacks ``-I``, ``V`` and
    ``K``, followed by one unit row per capped edge.
    """
    edges = [e.key for e in inst.edges]
    m = len(edges)
    accs = list(inst.exposures)
    secs = list(inst.values)
    K = _zeros(len(accs), m)
    V = _zeros(len(secs), m)
    arow = {j: k for k, j in enumerate(accs)}
    srow = {i: k for k, i in enumerate(secs)}
    for col, (i, j) in enumerate(edges):
        K[arow[j], col] = Fraction(1)
        V[srow[i], col] = Fraction(1)
    inv_e = _zeros(len(accs), len(accs))
    for j, k in arow.items():
        inv_e[k, k] = Fraction(1, inst.exposures[j])
    P = 2 * K.T.dot(inv_e).dot(K)
    q = np.array([Fraction(-2)] * m, dtype=object)
    eye = _zeros(m, m)
    for k in range(m):
        eye[k, k] = Fraction(-1)
    cap_rows = []
    cap_h = []
    for col, e in enumerate(inst.edges):
        if e.cap is not None:
            row = _zeros(m)
            row[col] = Fraction(1)
            cap_rows.append(row)
            cap_h.append(Fraction(e.cap))
    blocks = [eye, V, K] + ([np.vstack(cap_rows)] if cap_rows else [])
    G = np.vstack(blocks) if m else _zeros(0, 0)
    h = np.array([Fraction(0)] * m
                 + [Fraction(inst.values[i]) for i in secs]
                 + [Fraction(inst.exposures[j]) for j in accs]
                 + cap_h, dtype=object)
    return QpStandardForm(P, q, G, h, K, V,
                          Fraction(sum(inst.exposures.values())), edges)


def _float_objective(inst: Instance, x: dict) -> float:
    y = {j: 0.0 for j in inst.exposures}
    for (_, j), v in x.items():
        y[j] += v
    return sum((e - y[j]) ** 2 / e for j, e in inst.exposures.items())


def gradient_check(inst: Instance, f: FlowAssignment,
                   step: float = 1e-5) -> float:
    """Largest gap between ``-2 r_j`` and a central difference on edge ``ij``."""
    x = {e.key: float(f[e.key]) for e in inst.edges}
    y = inflows(inst, f)
    worst = 0.0
    for e in inst.edges:
        up, down = dict(x), dict(x)
        up[e.key] += step
        down[e.key] -= step
        fd = (_float_objective(inst, up) - _float_objective(inst, down)) / (
            2 * step)
        ex = inst.exposures[e.account]
        exact = -2 * float((ex - y[e.account]) / ex)
        worst = max(worst, abs(fd - exact))
    return worst


def random_feasible_flow(inst: Instance, rng: random.Random,
                         denominator: int = 7) -> FlowAssignment:
    """Random rational flow, scaled down until every constraint holds."""
    flow = {}
    for e in inst.edges:
        hi = min(inst.values[e.security], inst.exposures[e.account])
        if e.cap is not None:
            hi = min(hi, e.cap)
        flow[e.key] = Fraction(rng.randint(0, int(hi * denominator)),
                               denominator)
    for i, v in inst.values.items():
        out = sum((x for (s, _), x in flow.items() if s == i), Fraction(0))
        if out > v:
            for key in flow:
                if key[0] == i:
                    flow[key] *= Fraction(v) / out
    for j, ex in inst.exposures.items():
        got = sum((x for (_, a), x in flow.items() if a == j), Fraction(0))
        if got > ex:
            for key in flow:
                if key[1] == j:
                    flow[key] *= Fraction(ex) / got
    return FlowAssignment(flow)


def greedy_flow(inst: Instance, rng: random.Random) -> FlowAssignment:
    """Saturate edges one at a time in a random order."""
    left_v = {i: Fraction(v) for i, v in inst.values.items()}
    left_e = {j: Fraction(e) for j, e in inst.exposures.items()}
    order = list(inst.edges)
    rng.shuffle(order)
    flow = {}
    for e in order:
        x = min(left_v[e.security], left_e[e.account])
        if e.cap is not None:
            x = min(x, e.cap)
        flow[e.key] = x
        left_v[e.security] -= x
        left_e[e.account] -= x
    return FlowAssignment(flow)


def random_max_flow(inst: Instance, rng: random.Random,
                    anchor: Optional[FlowAssignment] = None
                    ) -> FlowAssignment:
    """A random maximum flow, optionally mixed with the maximum flow ``anchor``."""
    g = augment_to_maximum(inst, greedy_flow(inst, rng))
    if anchor is None or rng.random() < 0.5:
        return g
    t = Fraction(rng.randint(0, 16), 16)
    keys = {e.key for e in inst.edges}
    return FlowAssignment({k: t * anchor[k] + (1 - t) * g[k] for k in keys})


@dataclass
class ProbeResult:
    ok: bool
    best_objective: Fraction
    worst_candidate: Optional[FlowAssignment] = None
    worst_objective: Optional[Fraction] = None


def local_opt_probe(inst: Instance, f: FlowAssignment, trials: int = 100,
                    rng: Optional[random.Random] = None) -> ProbeResult:
    """Compare ``f`` against ``trials`` random feasible maximum flows."""
    rng = rng or random.Random(0)
    target = mwsr_objective(inst, f)
    for _ in range(trials):
        cand = random_max_flow(inst, rng, anchor=f)
        obj = mwsr_objective(inst, cand)
        if obj < target:
            return ProbeResult(False, target, cand, obj)
    return ProbeResult(True, target)
