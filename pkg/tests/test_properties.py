import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from ratioflow import make_instance, over_coverage_pass, phase_decompose
from ratioflow.model import flow_violations, mwsr_objective
from ratioflow.verification import (check_maximality, check_ratio_balance,
                                    oracle_risk_vector, qp_standard_form,
                                    random_feasible_flow)


@st.composite
def instances(draw, max_side=5, caps=False):
    ns = draw(st.integers(1, max_side))
    na = draw(st.integers(1, max_side))
    values = draw(st.lists(st.integers(1, 20), min_size=ns, max_size=ns))
    exposures = draw(st.lists(st.integers(1, 20), min_size=na, max_size=na))
    pairs = [(i + 1, j + 1) for i in range(ns) for j in range(na)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs),
                         max_size=len(pairs)))
    edges = [p for p, keep in zip(pairs, mask) if keep]
    cap_map = None
    if caps:
        cap_map = {p: draw(st.integers(0, 10)) for p in edges
                   if draw(st.booleans())}
    return make_instance(values, exposures, edges, caps=cap_map)


@settings(max_examples=150, deadline=None)
@given(instances(caps=True))
def test_balanced_output_is_certified(inst):
    rep = phase_decompose(inst)
    assert flow_violations(inst, rep.flow) == []
    assert check_ratio_balance(inst, rep.flow) == []
    assert check_maximality(inst, rep.flow) is None
    assert rep.risk_ratio == oracle_risk_vector(inst)


@settings(max_examples=150, deadline=None)
@given(instances())
def test_ratio_denominators_are_bounded(inst):
    bound = inst.n * inst.M
    for r in phase_decompose(inst).risk_ratio.values():
        assert r.numerator <= bound and r.denominator <= bound


@settings(max_examples=80, deadline=None)
@given(instances(), st.randoms(use_true_random=False))
def test_risk_vector_ignores_ordering(inst, rnd):
    edges = [e.key for e in inst.edges]
    rnd.shuffle(edges)
    secs, accs = list(inst.values), list(inst.exposures)
    rnd.shuffle(secs)
    rnd.shuffle(accs)
    # Relabel nodes so the solver sees a different node order as well.
    sid = {i: k + 1 for k, i in enumerate(secs)}
    aid = {j: k + 1 for k, j in enumerate(accs)}
    other = make_instance([inst.values[i] for i in secs],
                          [inst.exposures[j] for j in accs],
                          [(sid[i], aid[j]) for i, j in edges])
    r = phase_decompose(inst).risk_ratio
    r2 = phase_decompose(other).risk_ratio
    assert {j: r2[aid[j]] for j in inst.exposures} == r


@settings(max_examples=80, deadline=None)
@given(instances(caps=True), st.integers(0, 10 ** 6))
def test_qp_identity(inst, seed):
    qp = qp_standard_form(inst)
    rng = random.Random(seed)
    for _ in range(5):
        f = random_feasible_flow(inst, rng)
        x = [f[e.key] for e in inst.edges]
        assert qp.objective(x) == mwsr_objective(inst, f)


@settings(max_examples=80, deadline=None)
@given(instances(caps=True))
def test_over_coverage_pass_properties(inst):
    base = phase_decompose(inst)
    before = dict(base.flow.flow)
    rep = over_coverage_pass(inst, base)
    assert rep.flow.flow == before
    if rep.over_coverage is None:
        return
    flow, phases = rep.over_coverage
    assert flow_violations(inst, flow) == []
    lams = [p.lam for p in phases]
    assert lams == sorted(set(lams)) and lams[0] >= 1
    covered = {j for j, r in rep.risk_ratio.items() if r == 0}
    assert set().union(*(p.tight_accounts for p in phases)) == covered
    for j in covered:
        assert flow.inflow(j) >= inst.exposures[j]
    for p in phases:
        for j in p.tight_accounts:
            assert flow.inflow(j) == p.lam * inst.exposures[j] or \
                inst.has_caps


@settings(max_examples=100, deadline=None)
@given(instances())
def test_phase_ratio_matches_tight_sets(inst):
    rep = phase_decompose(inst)
    for p in rep.phases:
        if p.lam < 1 and p.tight_securities:
            v = sum(inst.values[i] for i in p.tight_securities)
            e = sum(inst.exposures[j] for j in p.tight_accounts)
            assert Fraction(v, e) == p.lam
