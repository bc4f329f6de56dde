"""
Three securities, three loans
=============================

Balancing collateral by hand, then letting the phase algorithm do it.
Run with ``python demos/01_three_loans.py``.
"""

from fractions import Fraction

from ratioflow import make_instance, phase_decompose
from ratioflow.model import FlowAssignment, mwsr_objective, risk_vector
from ratioflow.verification import check_ratio_balance

# Securities worth 3, 3 and 5 back loans of 4, 6 and 6.  Security 2 may be
# used for loans 1 and 2, security 3 for loans 2 and 3.
inst = make_instance(values=[3, 3, 5], exposures=[4, 6, 6],
                     edges=[(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)])

# A first guess: fill loan 1 completely, then spread the rest.
guess = FlowAssignment({(1, 1): 3, (2, 1): 1, (2, 2): 2, (3, 2): 4,
                        (3, 3): 1})
print("guess risk ratios:", risk_vector(inst, guess))
print("guess objective:  ", mwsr_objective(inst, guess))

# Security 3 feeds loan 2 although loan 3 is far worse covered.
print("violations (i, j, l):", check_ratio_balance(inst, guess))

report = phase_decompose(inst)
for phase in report.phases:
    print(f"phase {phase.k}: lambda = {phase.lam}, "
          f"securities {sorted(phase.tight_securities)}, "
          f"accounts {sorted(phase.tight_accounts)}")

for (i, j), x in sorted(report.flow.flow.items()):
    print(f"  f[{i},{j}] = {x}")

print("risk ratios:", {j: str(r) for j, r in report.risk_ratio.items()})
print("objective:  ", report.objective)
assert report.risk_ratio[1] == Fraction(1, 4)

# Each phase fixes the accounts that cannot do better: their risk ratio is
# 1 - lambda, and the securities cut off with them are used up.
print("queries spent:", report.queries)
