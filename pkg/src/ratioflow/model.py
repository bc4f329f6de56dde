"""Instance model, flow assignments and the derived risk quantities.

All numbers are exact: values and exposures are integers (decimal input is
scaled by a common factor), flows and ratios are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Optional

Ratio = Fraction
EdgeKey = tuple  # (security id, account id)


class InstanceError(ValueError):
    """Raised when an instance description is malformed.

    ``section`` and ``index`` point at the offending item of the raw input
    (e.g. ``("accounts", 2)``) so front ends can anchor the message.
    """

    def __init__(self, message: str, section: Optional[str] = None,
                 index: Optional[int] = None):
        super().__init__(message)
        self.section = section
        self.index = index


class NonPositiveExposure(InstanceError):
    pass


class NegativeValue(InstanceError):
    pass


class DuplicateEdge(InstanceError):
    pass


class DanglingEndpoint(InstanceError):
    pass


class PartialPriorities(InstanceError):
    pass


class InfeasibleFlow(ValueError):
    """A flow violates a capacity or non-negativity constraint."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class IsolatedSecurityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Edge:
    security: Hashable
    account: Hashable
    cap: Optional[Fraction] = None
    priority: Optional[int] = None

    @property
    def key(self) -> EdgeKey:
        return (self.security, self.account)


@dataclass(frozen=True, eq=False)
class Instance:
    """Bipartite collateral graph with integer values and exposures.

    ``values`` and ``exposures`` are insertion-ordered mappings from id to a
    non-negative (resp. positive) integer.  ``scale`` is the factor the raw
    input was multiplied by to make every number integral.
    """

    values: Mapping[Hashable, int]
    exposures: Mapping[Hashable, int]
    edges: tuple[Edge, ...]
    scale: int = 1
    warnings: tuple[str, ...] = ()
    _by_key: dict = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_key", {e.key: e for e in self.edges})

    @property
    def securities(self) -> list:
        return list(self.values)

    @property
    def accounts(self) -> list:
        return list(self.exposures)

    @property
    def n(self) -> int:
        return len(self.values) + len(self.exposures)

    @property
    def M(self) -> int:
        return max([*self.values.values(), *self.exposures.values()], default=0)

    @property
    def has_caps(self) -> bool:
        return any(e.cap is not None for e in self.edges)

    @property
    def num_priorities(self) -> int:
        return max((e.priority or 0 for e in self.edges), default=0)

    def edge(self, security, account) -> Edge:
        return self._by_key[(security, account)]

    def has_edge(self, security, account) -> bool:
        return (security, account) in self._by_key

    def edges_of_security(self, security) -> list[Edge]:
        return [e for e in self.edges if e.security == security]

    def edges_of_account(self, account) -> list[Edge]:
        return [e for e in self.edges if e.account == account]

    def restrict(self, securities: Iterable, accounts: Iterable,
                 values: Optional[Mapping] = None) -> "Instance":
        """Sub-instance on the given nodes (optionally with new values).

        Fractional replacement values are rescaled jointly with exposures and
        caps so the result is integral again; ratios are unaffected.
        """
        secs = list(securities)
        accs = list(accounts)
        keep_s, keep_a = set(secs), set(accs)
        vals = {i: Fraction(values[i] if values is not None else self.values[i])
                for i in secs}
        edges = [e for e in self.edges
                 if e.security in keep_s and e.account in keep_a]
        factor = _lcm_of_denominators(
            [*vals.values(), *(e.cap for e in edges if e.cap is not None)])
        return Instance(
            values={i: int(v * factor) for i, v in vals.items()},
            exposures={j: self.exposures[j] * factor for j in accs},
            edges=tuple(Edge(e.security, e.account,
                             None if e.cap is None else e.cap * factor,
                             e.priority) for e in edges),
            scale=self.scale * factor,
        )


@dataclass
class FlowAssignment:
    """Per-edge flow values; edges absent from ``flow`` carry zero."""

    flow: dict
    over_coverage: bool = False

    def __getitem__(self, key) -> Fraction:
        return self.flow.get(key, Fraction(0))

    def inflow(self, account) -> Fraction:
        return sum((f for (_, j), f in self.flow.items() if j == account),
                   Fraction(0))

    def outflow(self, security) -> Fraction:
        return sum((f for (i, _), f in self.flow.items() if i == security),
                   Fraction(0))

    def total(self) -> Fraction:
        return sum(self.flow.values(), Fraction(0))

    def scaled(self, factor) -> "FlowAssignment":
        return FlowAssignment({k: v * factor for k, v in self.flow.items()},
                              self.over_coverage)


@dataclass(frozen=True)
class PhaseRecord:
    k: int
    lam: Fraction
    tight_securities: frozenset
    tight_accounts: frozenset


@dataclass
class BalanceReport:
    flow: FlowAssignment
    surplus: dict
    risk_ratio: dict
    phases: list
    objective: Fraction
    over_coverage: Optional[tuple] = None  # (FlowAssignment, [PhaseRecord])
    priority_profile: Optional[tuple] = None
    queries: int = 0

    @property
    def secured_fraction(self) -> dict:
        return {j: 1 - r for j, r in self.risk_ratio.items()}


def _lcm_of_denominators(numbers: Iterable[Fraction]) -> int:
    return math.lcm(1, *(Fraction(x).denominator for x in numbers))


def parse_number(x: Any) -> Fraction:
    """Exact value of an integer, decimal string or Fraction."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        x = repr(x)
    if isinstance(x, Decimal):
        return Fraction(x)
    if isinstance(x, str):
        try:
            d = Decimal(x.strip())
        except InvalidOperation:
            raise ValueError(f"not a decimal number: {x!r}") from None
        if not d.is_finite():
            raise ValueError(f"not a finite number: {x!r}")
        return Fraction(d)
    raise TypeError(f"unsupported number type {type(x).__name__}")


def validate_instance(raw: Mapping) -> Instance:
    """Normalize a parsed instance description into an :class:`Instance`.

    ``raw`` has the shape of the JSON instance file: ``securities`` and
    ``accounts`` lists of ``{"id", "value"}`` / ``{"id", "exposure"}`` and an
    ``edges`` list of ``{"security", "account", "cap"?, "priority"?}``.
    Securities without edges are dropped with an
    :class:`IsolatedSecurityWarning`; accounts without edges are kept.
    """
    def number(item, key, section, idx):
        try:
            return parse_number(item[key])
        except KeyError:
            raise InstanceError(f"{section}[{idx}]: missing {key!r}",
                                section, idx) from None
        except (TypeError, ValueError) as exc:
            raise InstanceError(f"{section}[{idx}]: {key}: {exc}",
                                section, idx) from None

    def items(section):
        seq = raw.get(section, [])
        if not isinstance(seq, list):
            raise InstanceError(f"{section!r} must be a list", section)
        for idx, item in enumerate(seq):
            if not isinstance(item, Mapping):
                raise InstanceError(f"{section}[{idx}] must be an object",
                                    section, idx)
        return seq

    if not isinstance(raw, Mapping):
        raise InstanceError("instance must be an object")

    values: dict = {}
    for idx, item in enumerate(items("securities")):
        sid = _ident(item, "id", "securities", idx)
        if sid in values:
            raise InstanceError(f"duplicate security id {sid!r}",
                                "securities", idx)
        v = number(item, "value", "securities", idx)
        if v < 0:
            raise NegativeValue(f"security {sid!r}: value {v} is negative",
                                "securities", idx)
        values[sid] = v

    exposures: dict = {}
    for idx, item in enumerate(items("accounts")):
        aid = _ident(item, "id", "accounts", idx)
        if aid in exposures:
            raise InstanceError(f"duplicate account id {aid!r}",
                                "accounts", idx)
        e = number(item, "exposure", "accounts", idx)
        if e <= 0:
            raise NonPositiveExposure(
                f"account {aid!r}: exposure must be positive (got {e})",
                "accounts", idx)
        exposures[aid] = e

    edges = []
    seen = set()
    with_priority = 0
    raw_edges = items("edges")
    for idx, item in enumerate(raw_edges):
        sid = _ident(item, "security", "edges", idx)
        aid = _ident(item, "account", "edges", idx)
        if sid not in values:
            raise DanglingEndpoint(f"edge {idx}: unknown security {sid!r}",
                                   "edges", idx)
        if aid not in exposures:
            raise DanglingEndpoint(f"edge {idx}: unknown account {aid!r}",
                                   "edges", idx)
        if (sid, aid) in seen:
            raise DuplicateEdge(f"edge {idx}: duplicate edge {sid!r}->{aid!r}",
                                "edges", idx)
        seen.add((sid, aid))
        cap = None
        if item.get("cap") is not None:
            cap = number(item, "cap", "edges", idx)
            if cap < 0:
                raise InstanceError(f"edge {idx}: negative cap {cap}",
                                    "edges", idx)
        prio = item.get("priority")
        if prio is not None:
            if isinstance(prio, bool) or not isinstance(prio, int) or prio < 1:
                raise InstanceError(
                    f"edge {idx}: priority must be a positive integer",
                    "edges", idx)
            with_priority += 1
        edges.append(Edge(sid, aid, cap, prio))

    if 0 < with_priority < len(edges):
        missing = next(i for i, e in enumerate(edges) if e.priority is None)
        raise PartialPriorities(
            f"edge {missing}: priorities must be given on all edges or none",
            "edges", missing)
    if with_priority:
        used = {e.priority for e in edges}
        if used != set(range(1, max(used) + 1)):
            raise InstanceError(
                f"priorities must form 1..P, got {sorted(used)}", "edges")

    notes = []
    connected = {e.security for e in edges}
    for sid in list(values):
        if sid not in connected:
            msg = f"security {sid!r} has no eligible account and was removed"
            warnings.warn(msg, IsolatedSecurityWarning, stacklevel=2)
            notes.append(msg)
            del values[sid]

    factor = _lcm_of_denominators(
        [*values.values(), *exposures.values(),
         *(e.cap for e in edges if e.cap is not None)])
    return Instance(
        values={i: int(v * factor) for i, v in values.items()},
        exposures={j: int(e * factor) for j, e in exposures.items()},
        edges=tuple(Edge(e.security, e.account,
                         None if e.cap is None else e.cap * factor, e.priority)
                    for e in edges),
        scale=factor,
        warnings=tuple(notes),
    )


def _ident(item, key, section, idx):
    try:
        value = item[key]
    except KeyError:
        raise InstanceError(f"{section}[{idx}]: missing {key!r}",
                            section, idx) from None
    if isinstance(value, (list, dict)) or value is None:
        raise InstanceError(f"{section}[{idx}]: {key} must be a string or "
                            f"integer", section, idx)
    return value


def make_instance(values, exposures, edges, caps=None, priorities=None,
                  ) -> Instance:
    """Build an instance with 1-based integer ids from plain sequences.

    ``edges`` holds ``(security, account)`` pairs using those 1-based ids;
    ``caps`` and ``priorities`` map edge pairs (or are sequences aligned with
    ``edges``) to the respective attribute.
    """
    def lookup(table, pos, key):
        if table is None:
            return None
        if isinstance(table, Mapping):
            return table.get(key)
        return table[pos]

    raw = {
        "securities": [{"id": i + 1, "value": v} for i, v in enumerate(values)],
        "accounts": [{"id": j + 1, "exposure": e}
                     for j, e in enumerate(exposures)],
        "edges": [],
    }
    for pos, (i, j) in enumerate(edges):
        item = {"security": i, "account": j}
        cap = lookup(caps, pos, (i, j))
        prio = lookup(priorities, pos, (i, j))
        if cap is not None:
            item["cap"] = cap
        if prio is not None:
            item["priority"] = prio
        raw["edges"].append(item)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IsolatedSecurityWarning)
        return validate_instance(raw)


def flow_violations(inst: Instance, f: FlowAssignment) -> list[str]:
    """Every constraint of ``inst`` that ``f`` breaks, as readable strings."""
    out = []
    for key, x in f.flow.items():
        if not inst.has_edge(*key):
            out.append(f"flow on non-edge {key[0]!r}->{key[1]!r}")
            continue
        if x < 0:
            out.append(f"negative flow {x} on {key[0]!r}->{key[1]!r}")
        cap = inst.edge(*key).cap
        if cap is not None and x > cap:
            out.append(f"flow {x} exceeds cap {cap} on {key[0]!r}->{key[1]!r}")
    outflow: dict = {}
    inflow: dict = {}
    for (i, j), x in f.flow.items():
        outflow[i] = outflow.get(i, 0) + x
        inflow[j] = inflow.get(j, 0) + x
    for i, x in outflow.items():
        if i in inst.values and x > inst.values[i]:
            out.append(f"security {i!r}: outflow {x} exceeds value "
                       f"{inst.values[i]}")
        elif i not in inst.values and x != 0:
            out.append(f"flow from unknown security {i!r}")
    if not f.over_coverage:
        for j, x in inflow.items():
            if j in inst.exposures and x > inst.exposures[j]:
                out.append(f"account {j!r}: inflow {x} exceeds exposure "
                           f"{inst.exposures[j]}")
    return out


def _check(inst: Instance, f: FlowAssignment):
    bad = flow_violations(inst, f)
    if bad:
        raise InfeasibleFlow(bad)


def inflows(inst: Instance, f: FlowAssignment) -> dict:
    acc = {j: Fraction(0) for j in inst.exposures}
    for (_, j), x in f.flow.items():
        acc[j] += x
    return acc


def surplus_vector(inst: Instance, f: FlowAssignment) -> dict:
    _check(inst, f)
    return {j: inst.exposures[j] - y for j, y in inflows(inst, f).items()}


def risk_vector(inst: Instance, f: FlowAssignment) -> dict:
    """Unsecured fraction ``(e_j - inflow_j) / e_j`` of every account."""
    return {j: s / inst.exposures[j]
            for j, s in surplus_vector(inst, f).items()}


def mwsr_objective(inst: Instance, f: FlowAssignment) -> Fraction:
    """Exposure-weighted sum of squared risk ratios, ``sum_j e_j r_j**2``."""
    r = risk_vector(inst, f)
    return sum((inst.exposures[j] * x * x for j, x in r.items()), Fraction(0))
