"""JSON instance/report files and the plain-text QP export."""

from __future__ import annotations

import json
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Optional

from .model import (BalanceReport, FlowAssignment, Instance, InstanceError,
                    validate_instance)
from .verification import QpStandardForm


class InputError(ValueError):
    """Unreadable or invalid input, with an optional 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


def item_lines(text: str) -> dict:
    """Line on which each element of every top-level array starts.

    Returns ``{key: [line, ...]}`` for arrays directly under the top-level
    object, e.g. ``{"accounts": [3, 4, 5], ...}``.
    """
    out: dict = {}
    depth = 0
    line = 1
    key = None
    last_string = None
    expect_item = False
    k = 0
    while k < len(text):
        ch = text[k]
        if ch == "\n":
            line += 1
        elif ch == '"':
            end = k + 1
            while text[end] != '"':
                end += 2 if text[end] == "\\" else 1
            last_string = text[k + 1:end]
            if depth == 2 and expect_item and key is not None:
                out[key].append(line)
                expect_item = False
            k = end
        elif ch in "{[":
            if depth == 1 and ch == "[":
                key = last_string
                out[key] = []
                expect_item = True
            elif depth == 1:
                key = None
            elif depth == 2 and expect_item and key is not None:
                out[key].append(line)
                expect_item = False
            depth += 1
        elif ch in "}]":
            depth -= 1
        elif ch == "," and depth == 2:
            expect_item = True
        elif depth == 2 and expect_item and not ch.isspace() and key:
            out[key].append(line)
            expect_item = False
        k += 1
    return out


def parse_instance_text(text: str) -> Instance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    try:
        return validate_instance(raw)
    except InstanceError as exc:
        line = None
        if exc.section is not None:
            try:
                lines = item_lines(text).get(exc.section, [])
                line = lines[exc.index] if exc.index is not None else None
            except (IndexError, KeyError):
                line = None
        raise InputError(str(exc), line) from None


def load_instance(path: str) -> Instance:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_instance_text(text)


def decimal_string(x: Fraction, precision: int = 6) -> str:
    with localcontext() as ctx:
        ctx.prec = 80
        d = Decimal(x.numerator) / Decimal(x.denominator)
        return str(d.quantize(Decimal(1).scaleb(-precision),
                              rounding=ROUND_HALF_EVEN))


def rational(x: Fraction, precision: int) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator,
            "decimal": decimal_string(x, precision)}


def read_rational(obj) -> Fraction:
    if isinstance(obj, dict):
        return Fraction(int(obj["num"]), int(obj["den"]))
    raise ValueError(f"expected {{num, den}}, got {obj!r}")


def _flow_entries(inst: Instance, f: FlowAssignment, precision: int) -> list:
    out = []
    for e in inst.edges:
        x = f[e.key] / inst.scale
        out.append({"security": e.security, "account": e.account,
                     "value": {"num": x.numerator, "den": x.denominator},
                     "decimal": decimal_string(x, precision)})
    return out


def _phase_entries(phases, precision: int) -> list:
    return [{"k": p.k, "lambda": rational(p.lam, precision),
             "tight_securities": sorted(p.tight_securities, key=str),
             "tight_accounts": sorted(p.tight_accounts, key=str)}
            for p in phases]


def report_to_dict(inst: Instance, report: BalanceReport,
                   precision: int = 6) -> dict:
    """Report in original input units (flows and surpluses divided by scale)."""
    accounts = []
    for j in inst.exposures:
        r = report.risk_ratio[j]
        accounts.append({
            "id": j,
            "surplus": rational(report.surplus[j] / inst.scale, precision),
            "risk_ratio": rational(r, precision),
            "secured_fraction": rational(1 - r, precision),
        })
    out = {
        "scale": inst.scale,
        "flow": _flow_entries(inst, report.flow, precision),
        "accounts": accounts,
        "phases": _phase_entries(report.phases, precision),
        "objective": rational(report.objective / inst.scale, precision),
        "queries": report.queries,
    }
    if report.over_coverage is not None:
        flow, phases = report.over_coverage
        out["over_coverage"] = {"flow": _flow_entries(inst, flow, precision),
                                "phases": _phase_entries(phases, precision)}
    if report.priority_profile is not None:
        out["priority_profile"] = [
            {"priority": p + 1, "total": rational(t / inst.scale, precision)}
            for p, t in enumerate(report.priority_profile)]
    if inst.warnings:
        out["warnings"] = list(inst.warnings)
    return out


def _match_id(value, ids):
    if value in ids:
        return value
    for cand in ids:
        if str(cand) == str(value):
            return cand
    raise KeyError(value)


def flow_from_report(inst: Instance, report: dict,
                     section: str = "flow") -> FlowAssignment:
    """Read a report's flow back into instance (scaled) units.

    Raises :class:`InputError` on edges the instance does not have.
    """
    src = report if section == "flow" else report[section]
    entries = src["flow"]
    flow = {}
    for pos, item in enumerate(entries):
        try:
            i = _match_id(item["security"], inst.values)
            j = _match_id(item["account"], inst.exposures)
        except KeyError as exc:
            raise InputError(f"report flow[{pos}]: unknown node {exc}") from None
        if not inst.has_edge(i, j):
            raise InputError(f"report flow[{pos}]: {i!r}->{j!r} is not an "
                             f"edge of the instance")
        try:
            flow[(i, j)] = read_rational(item["value"]) * inst.scale
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"report flow[{pos}]: bad value ({exc})") from None
    return FlowAssignment(flow)


def _cell(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def qp_to_text(qp: QpStandardForm) -> str:
    """Dense plain-text rendering, one matrix row per line.

    Layout::

        # comment lines
        edges <m>
        <column> <security> <account>       (m lines)
        matrix <name> <rows> <cols>
        <row entries separated by single spaces>
        vector <name> <length>
        <entries on one line>
        scalar constant
        <value>

    Entries are integers or ``num/den``.  Blocks appear in the order qp_P,
    q, G, h, K, V, constant.
    """
    lines = ["# minimize 1/2 x' qp_P x + q' x + constant  s.t.  G x <= h",
             "# G rows: -I (m), V (securities), K (accounts), cap rows",
             f"edges {len(qp.edges)}"]
    for col, (i, j) in enumerate(qp.edges):
        lines.append(f"{col} {i} {j}")

    def matrix(name, a):
        rows, cols = a.shape if a.ndim == 2 else (0, 0)
        lines.append(f"matrix {name} {rows} {cols}")
        for row in a:
            lines.append(" ".join(_cell(x) for x in row))

    def vector(name, a):
        lines.append(f"vector {name} {len(a)}")
        if len(a):
            lines.append(" ".join(_cell(x) for x in a))

    matrix("qp_P", qp.qp_P)
    vector("q", qp.q)
    matrix("G", qp.G)
    vector("h", qp.h)
    matrix("K", qp.K)
    matrix("V", qp.V)
    lines.append("scalar constant")
    lines.append(_cell(qp.constant))
    return "\n".join(lines) + "\n"


def parse_qp_text(text: str) -> dict:
    """Inverse of :func:`qp_to_text`: name -> list of rows / list / scalar."""
    out: dict = {}
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    k = 0
    while k < len(rows):
        head = rows[k].split()
        if head[0] == "edges":
            k += 1 + int(head[1])
        elif head[0] == "matrix":
            n = int(head[2])
            out[head[1]] = [[Fraction(x) for x in rows[k + 1 + r].split()]
                            for r in range(n)]
            k += 1 + n
        elif head[0] == "vector":
            n = int(head[2])
            out[head[1]] = [Fraction(x) for x in rows[k + 1].split()] if n else []
            k += 2 if n else 1
        elif head[0] == "scalar":
            out[head[1]] = Fraction(rows[k + 1])
            k += 2
        else:
            raise ValueError(f"unexpected line {rows[k]!r}")
    return out
