"""Command line front end.

Exit codes: 0 success, 1 verification found violations, 2 input error,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from fractions import Fraction

from .balancer import InvariantError, over_coverage_pass, phase_decompose
from .formats import (InputError, flow_from_report, load_instance,
                      qp_to_text, read_rational, report_to_dict)
from .model import Edge, flow_violations, inflows, mwsr_objective, risk_vector
from .priorities import (balance_with_priorities, lex_optimal_profile,
                         priority_balance_violations, priority_profile)
from .search import BudgetExceeded
from .verification import (TooLarge, check_maximality, check_ratio_balance,
                           maximality_gap, oracle_risk_vector,
                           qp_standard_form)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


def _fail_input(path: str, exc: InputError) -> int:
    where = f"{path}:{exc.line}" if exc.line else path
    print(f"{where}: error: {exc}", file=sys.stderr)
    return EXIT_INPUT


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_balance(args) -> int:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inst = load_instance(args.input)
    except InputError as exc:
        return _fail_input(args.input, exc)
    has_priorities = inst.num_priorities > 0
    if args.priorities and not has_priorities:
        return _fail_input(args.input, InputError(
            "--priorities given but the edges carry no priorities"))
    if args.priorities and args.over_coverage:
        return _fail_input(args.input, InputError(
            "--over-coverage cannot be combined with --priorities"))
    if has_priorities and not args.priorities:
        print(f"{args.input}: warning: edge priorities ignored "
              f"(pass --priorities to use them)", file=sys.stderr)
        inst = _drop_priorities(inst)
    try:
        if args.priorities:
            report = balance_with_priorities(inst)
        else:
            report = phase_decompose(inst)
            if args.over_coverage:
                report = over_coverage_pass(inst, report)
            if len(inst.exposures) <= args.max_oracle_size:
                expected = oracle_risk_vector(inst, args.max_oracle_size)
                if expected != report.risk_ratio:
                    raise InvariantError("risk vector disagrees with the "
                                         "subset oracle")
    except (InvariantError, BudgetExceeded, TooLarge) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    doc = report_to_dict(inst, report, args.precision)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def _drop_priorities(inst):
    return replace(inst, edges=tuple(Edge(e.security, e.account, e.cap)
                                     for e in inst.edges))


def cmd_verify(args) -> int:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inst = load_instance(args.input)
    except InputError as exc:
        return _fail_input(args.input, exc)
    try:
        with open(args.report, encoding="utf-8") as fh:
            doc = json.load(fh)
        f = flow_from_report(inst, doc)
    except OSError as exc:
        return _fail_input(args.report, InputError(exc.strerror))
    except json.JSONDecodeError as exc:
        return _fail_input(args.report, InputError(exc.msg, exc.lineno))
    except InputError as exc:
        return _fail_input(args.report, exc)
    except (KeyError, TypeError) as exc:
        return _fail_input(args.report, InputError(f"malformed report: {exc}"))

    tol = args.tolerance
    problems = list(flow_violations(inst, f))
    if not problems:
        prioritised = "priority_profile" in doc and inst.num_priorities > 0
        if prioritised:
            profile, potentials = lex_optimal_profile(inst)
            got = priority_profile(inst, f)
            if got != profile:
                problems.append(f"priority profile {_fmt(got)} is not the "
                                f"optimum {_fmt(profile)}")
            bad = priority_balance_violations(inst, f, potentials)
        else:
            bad = check_ratio_balance(inst, f, tol=tol)
            path = check_maximality(inst, f)
            if path is not None and (not tol or
                                     maximality_gap(inst, f) > tol * inst.scale):
                hops = " ".join(str(u) for u, _, _ in path) + " t"
                problems.append(f"not a maximum flow: augmenting path {hops}")
        r = risk_vector(inst, f)
        for i, j, l in bad:
            problems.append(f"ratio balance: security {i!r} sends flow to "
                            f"account {j!r} (risk {r[j]}) although account "
                            f"{l!r} is worse covered (risk {r[l]})")
        try:
            claimed = read_rational(doc["objective"]) * inst.scale
            actual = mwsr_objective(inst, f)
            if abs(claimed - actual) > tol * inst.scale:
                problems.append(f"objective {claimed / inst.scale} != "
                                f"recomputed {actual / inst.scale}")
        except (KeyError, ValueError, TypeError):
            problems.append("report has no readable objective")
        for item in doc.get("accounts", []):
            j = item.get("id")
            if j in r and abs(read_rational(item["risk_ratio"]) - r[j]) > tol:
                problems.append(f"account {j!r}: reported risk ratio differs "
                                f"from recomputed {r[j]}")
        if "over_coverage" in doc:
            try:
                g = flow_from_report(inst, doc, "over_coverage")
            except InputError as exc:
                return _fail_input(args.report, exc)
            g.over_coverage = True
            problems += [f"over-coverage: {p}" for p in flow_violations(inst, g)]
            y = inflows(inst, g)
            for j, ex in inst.exposures.items():
                if r[j] == 0 and y[j] < ex:
                    problems.append(f"over-coverage: account {j!r} receives "
                                    f"{y[j]} < exposure {ex}")
    for p in problems:
        print(p)
    if problems:
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


def _fmt(profile) -> str:
    return "(" + ", ".join(str(x) for x in profile) + ")"


def cmd_export_qp(args) -> int:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            inst = load_instance(args.input)
    except InputError as exc:
        return _fail_input(args.input, exc)
    _emit(qp_to_text(qp_standard_form(inst)), args.out)
    return EXIT_OK


def _nonneg_fraction(text: str) -> Fraction:
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if x < 0:
        raise argparse.ArgumentTypeError("tolerance must be non-negative")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratioflow",
        description="Ratio-balanced collateral allocation in exact arithmetic.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("balance", help="compute a ratio-balanced flow")
    p.add_argument("input", help="instance JSON file")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--over-coverage", action="store_true",
                   help="spread leftover value over fully covered accounts")
    p.add_argument("--priorities", action="store_true",
                   help="require edge priorities and honour them")
    p.add_argument("--precision", type=int, default=6,
                   help="decimal digits in the rendered numbers (default 6)")
    p.add_argument("--max-oracle-size", type=int, default=10,
                   help="cross-check against the subset oracle when there are "
                        "at most this many accounts (default 10, 0 disables)")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("verify", help="check a report against its instance")
    p.add_argument("input", help="instance JSON file")
    p.add_argument("report", help="report JSON produced by 'balance'")
    p.add_argument("--tolerance", type=_nonneg_fraction, default=Fraction(0),
                   help="slack for risk-ratio comparisons, the objective and "
                        "the missing flow value, for rounded solutions from "
                        "floating-point solvers (default 0: exact)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-qp", help="write the quadratic program")
    p.add_argument("input", help="instance JSON file")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_export_qp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
