"""
Priority classes
================

Account 3 has first rights to security 2, account 2 only second rights.
Flow is maximised class by class; balancing happens among the flows that
keep those class totals.
"""

from fractions import Fraction

from ratioflow import (balance_with_priorities, eval_priority_objective,
                       lex_optimal_profile, make_instance)
from ratioflow.model import FlowAssignment

inst = make_instance(values=[20, 20], exposures=[20, 20, 5],
                     edges=[(1, 1), (1, 2), (2, 2), (2, 3)],
                     priorities=[1, 1, 2, 1])

profile, potentials = lex_optimal_profile(inst)
print("best totals per class:", [str(t) for t in profile])

report = balance_with_priorities(inst)
print("flow:", [str(report.flow[e.key]) for e in inst.edges])
print("risk ratios:", {j: str(r) for j, r in report.risk_ratio.items()})

# The weighted objective with a small epsilon prefers the same flow.
eps = Fraction(1, 1000)
other = FlowAssignment({(1, 1): 20, (1, 2): 0, (2, 2): 15, (2, 3): 5})
print("weighted objective, balanced:", float(
    eval_priority_objective(inst, report.flow, eps)))
print("weighted objective, other:   ", float(
    eval_priority_objective(inst, other, eps)))
