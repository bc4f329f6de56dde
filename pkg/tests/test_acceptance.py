"""The eleven acceptance criteria, each at its stated tolerance.

Every test records a pass/fail line that is printed in the terminal summary
(``pytest -v`` shows them under "acceptance criteria").
"""

import json
import math
import random
import time
from fractions import Fraction

import pytest

from ratioflow import (balance_with_priorities, make_instance,
                       over_coverage_pass, phase_decompose)
from ratioflow.balancer import phase_query_limit
from ratioflow.cli import main
from ratioflow.formats import report_to_dict
from ratioflow.model import FlowAssignment, mwsr_objective, risk_vector
from ratioflow.verification import (check_maximality, check_ratio_balance,
                                    gradient_check, local_opt_probe,
                                    oracle_risk_vector, qp_standard_form,
                                    random_feasible_flow)

from instances import as_json, figure1, intro, over_coverage, priorities

ROUNDED_FIGURE1_X = ["4.88", "3.12", "0.46", "0.43", "7.11"]
# The displayed vector is rounded to two decimals; verify it with a slack of
# one unit in that last place.
ROUNDING_SLACK = "0.01"


@pytest.fixture(scope="module")
def corpus_reports(random_corpus):
    start = time.perf_counter()
    reports = [phase_decompose(inst) for inst in random_corpus]
    return reports, time.perf_counter() - start


def record(log, k, passed, detail):
    log[k] = (bool(passed), detail)
    assert passed, detail


def test_criterion_01_intro_example(acceptance_log):
    start = time.perf_counter()
    rep = phase_decompose(intro())
    took = time.perf_counter() - start
    ok = (rep.flow.flow == {(1, 1): 3, (2, 1): 0, (2, 2): 3, (3, 2): 1,
                            (3, 3): 4}
          and rep.risk_ratio == {1: Fraction(1, 4), 2: Fraction(1, 3),
                                 3: Fraction(1, 3)}
          and [p.lam for p in rep.phases] == [Fraction(2, 3), Fraction(3, 4)]
          and took < 1)
    record(acceptance_log, 1, ok,
           f"f=(3,0,3,1,4), r=(1/4,1/3,1/3), lambdas=(2/3,3/4) in "
           f"{took * 1000:.1f} ms")


def test_criterion_02_figure1(acceptance_log, tmp_path, capsys):
    inst = figure1()
    rep = phase_decompose(inst)
    exact_ok = (set(rep.risk_ratio.values()) == {Fraction(5, 9)}
                and set(rep.secured_fraction.values()) == {Fraction(4, 9)}
                and rep.objective == Fraction(100, 9))

    x = [Fraction(v) for v in ROUNDED_FIGURE1_X]
    f = FlowAssignment({e.key: v for e, v in zip(inst.edges, x)})
    as_float = sum((e - sum(float(v) for (_, j), v in f.flow.items()
                            if j == acc)) ** 2 / e
                   for acc, e in inst.exposures.items())
    float_ok = abs(as_float - 100 / 9) <= 1e-4

    # The rounded vector as a report from an external solver, claiming the
    # optimum it was solving for.
    claimed = phase_decompose(inst)
    claimed.flow = f
    doc = report_to_dict(inst, claimed)
    inst_path = tmp_path / "figure1.json"
    rep_path = tmp_path / "rounded_vector.json"
    inst_path.write_text(json.dumps(as_json(inst)))
    rep_path.write_text(json.dumps(doc))
    strict = main(["verify", str(inst_path), str(rep_path)])
    slack = main(["verify", str(inst_path), str(rep_path),
                  "--tolerance", ROUNDING_SLACK])
    capsys.readouterr()
    record(acceptance_log, 2, exact_ok and float_ok and slack == 0,
           f"r=5/9 on all accounts, objective 100/9; rounded vector objective "
           f"{as_float:.6f} (|diff| {abs(as_float - 100 / 9):.1e}), verify "
           f"--tolerance {ROUNDING_SLACK} exit {slack} (exact verify exit "
           f"{strict})")


def test_criterion_03_over_coverage(acceptance_log):
    inst = over_coverage()
    rep = over_coverage_pass(inst, phase_decompose(inst))
    flow, phases = rep.over_coverage
    got = [(p.lam, set(p.tight_securities), set(p.tight_accounts))
           for p in phases]
    flows = {k: flow[k] for k in [(1, 1), (1, 2), (2, 2), (3, 2)]}
    ok = (got == [(1, {1}, {1}), (5, {2, 3}, {2})]
          and flows == {(1, 1): 1, (1, 2): 0, (2, 2): 2, (3, 2): 3})
    record(acceptance_log, 3, ok,
           "phases (1,{1},{1}), (5,{2,3},{2}); f11=1 f12=0 f22=2 f32=3")


def test_criterion_04_priorities(acceptance_log):
    inst = priorities()
    rep = balance_with_priorities(inst)
    x = [rep.flow[e.key] for e in inst.edges]
    ok = (x == [Fraction(35, 2), Fraction(5, 2), 15, 5]
          and rep.priority_profile == (25, 15)
          and rep.risk_ratio == {1: Fraction(1, 8), 2: Fraction(1, 8), 3: 0})
    record(acceptance_log, 4, ok,
           "x=(35/2,5/2,15,5), profile (25,15), r=(1/8,1/8,0)")


def test_criterion_05_oracle_equivalence(acceptance_log, random_corpus,
                                         corpus_reports):
    reports, took = corpus_reports
    start = time.perf_counter()
    bad = sum(rep.risk_ratio != oracle_risk_vector(inst)
              for inst, rep in zip(random_corpus, reports))
    total = took + time.perf_counter() - start
    record(acceptance_log, 5, bad == 0 and total < 60,
           f"{len(reports) - bad}/{len(reports)} risk vectors equal the "
           f"oracle; {total:.1f} s")


def test_criterion_06_invariants(acceptance_log, random_corpus,
                                 corpus_reports):
    reports, _ = corpus_reports
    eq4 = maxi = lemma = 0
    for inst, rep in zip(random_corpus, reports):
        eq4 += not check_ratio_balance(inst, rep.flow)
        maxi += check_maximality(inst, rep.flow) is None
        bound = inst.n * inst.M
        lemma += all(r.numerator <= bound and r.denominator <= bound
                     for r in rep.risk_ratio.values())
    n = len(reports)
    record(acceptance_log, 6, eq4 == maxi == lemma == n,
           f"ratio balance {eq4}/{n}, maximality {maxi}/{n}, "
           f"nM bound {lemma}/{n}")


def reordered(inst, variant):
    """Same instance with nodes and edges presented in another order."""
    secs, accs = list(inst.values), list(inst.exposures)
    edges = [e.key for e in inst.edges]
    if variant == 1:
        edges.reverse()
    elif variant == 2:
        secs.reverse()
        accs.reverse()
    elif variant == 3:
        secs.sort(key=lambda i: (-inst.values[i], i))
        accs.sort(key=lambda j: (inst.exposures[j], j))
        edges.sort(key=lambda k: (k[1], k[0]))
    elif variant == 4:
        secs = secs[1:] + secs[:1]
        accs = accs[len(accs) // 2:] + accs[:len(accs) // 2]
        edges = edges[len(edges) // 3:] + edges[:len(edges) // 3]
    sid = {i: k + 1 for k, i in enumerate(secs)}
    aid = {j: k + 1 for k, j in enumerate(accs)}
    other = make_instance([inst.values[i] for i in secs],
                          [inst.exposures[j] for j in accs],
                          [(sid[i], aid[j]) for i, j in edges])
    return other, aid


def test_criterion_07_uniqueness(acceptance_log, random_corpus,
                                 corpus_reports):
    reports, _ = corpus_reports
    same = 0
    for inst, rep in zip(random_corpus, reports):
        vectors = []
        for variant in range(5):
            other, aid = reordered(inst, variant)
            r = phase_decompose(other).risk_ratio
            vectors.append({j: r[aid[j]] for j in inst.exposures})
        same += all(v == rep.risk_ratio for v in vectors)
    n = len(reports)
    record(acceptance_log, 7, same == n,
           f"5 orderings agree on {same}/{n} instances")


def query_limit(inst, rep):
    return len(rep.phases) * phase_query_limit(inst.n * inst.M, 3)


def test_criterion_08_query_bound(acceptance_log, random_corpus,
                                  corpus_reports):
    reports, _ = corpus_reports
    within = sum(rep.queries <= query_limit(inst, rep)
                 for inst, rep in zip(random_corpus, reports))
    worst = max(rep.queries / query_limit(inst, rep)
                for inst, rep in zip(random_corpus, reports))
    few = [min(len(inst.values), len(inst.exposures)) >= len(rep.phases)
           for inst, rep in zip(random_corpus, reports)]
    over = [(inst, rep) for (inst, rep), ok
            in zip(zip(random_corpus, reports), few) if not ok]
    isolated = sum(any(not inst.edges_of_account(j) for j in inst.exposures)
                   for inst, _ in over)
    n = len(reports)
    detail = (f"queries within bound {within}/{n} (worst {worst:.2f} of it); "
              f"#phases <= min(|S|,|A|) on {n - len(over)}/{n}, the "
              f"{len(over)} others all have accounts without edges "
              f"({isolated}/{len(over)}) that need their own r=1 phase")
    acceptance_log[8] = (within == n and not over, detail)
    assert within == n, detail
    assert isolated == len(over), detail


@pytest.mark.xfail(strict=True, reason=(
    "an account without eligible securities ends with r = 1 and needs its "
    "own lambda = 0 phase, so #phases can exceed min(|S|, |A|)"))
def test_criterion_08_phase_count(random_corpus, corpus_reports):
    reports, _ = corpus_reports
    for inst, rep in zip(random_corpus, reports):
        assert len(rep.phases) <= min(len(inst.values), len(inst.exposures))


def test_criterion_09_qp_identity(acceptance_log, random_corpus):
    rng = random.Random(9)
    good = total = 0
    for inst in random_corpus:
        qp = qp_standard_form(inst)
        for _ in range(100):
            f = random_feasible_flow(inst, rng)
            x = [f[e.key] for e in inst.edges]
            good += qp.objective(x) == mwsr_objective(inst, f)
            total += 1
    record(acceptance_log, 9, good == total,
           f"{good}/{total} flows satisfy the identity exactly")


def interior_flow(inst, rng):
    """Feasible flow strictly inside every bound (positive, not saturated)."""
    f = random_feasible_flow(inst, rng)
    share = Fraction(1, 2 * max(len(inst.edges), 1))
    flow = {}
    for e in inst.edges:
        room = min(inst.values[e.security], inst.exposures[e.account])
        flow[e.key] = f[e.key] / 2 + share * room / 2
    return FlowAssignment(flow)


def test_criterion_10_gradient(acceptance_log, random_corpus):
    rng = random.Random(10)
    pool = [inst for inst in random_corpus if inst.edges]
    worst = 0.0
    for k in range(50):
        inst = pool[k]
        f = interior_flow(inst, rng)
        y = {j: f.inflow(j) for j in inst.exposures}
        assert all(0 < f[e.key] for e in inst.edges)
        assert all(0 < y[j] < e for j, e in inst.exposures.items()
                   if inst.edges_of_account(j))
        worst = max(worst, gradient_check(inst, f, step=1e-5))
    record(acceptance_log, 10, worst <= 1e-6,
           f"max |finite difference + 2 r_j| = {worst:.2e} over 50 interior "
           f"flows at step 1e-5")


def test_criterion_11_local_optimality(acceptance_log, random_corpus,
                                       corpus_reports):
    reports, _ = corpus_reports
    rng = random.Random(11)
    ok = 0
    for inst, rep in zip(random_corpus, reports):
        ok += local_opt_probe(inst, rep.flow, trials=100, rng=rng).ok
    n = len(reports)
    record(acceptance_log, 11, ok == n,
           f"no better candidate among 100 maximum flows on {ok}/{n} "
           f"instances")


def test_interior_flow_is_feasible():
    from ratioflow.model import flow_violations
    rng = random.Random(0)
    inst = intro()
    assert flow_violations(inst, interior_flow(inst, rng)) == []
    assert math.isfinite(gradient_check(inst, interior_flow(inst, rng)))
