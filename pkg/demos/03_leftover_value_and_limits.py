"""
Leftover value and claim limits
===============================

Two extensions: spreading surplus value over accounts that are already
fully covered, and capping what an account may draw from a security.
"""

from ratioflow import make_instance, over_coverage_pass, phase_decompose
from ratioflow.verification import oracle_risk_vector

# Both accounts are fully covered; securities 2 and 3 have value to spare.
inst = make_instance(values=[1, 2, 3], exposures=[1, 1],
                     edges=[(1, 1), (1, 2), (2, 2), (3, 2)])
report = over_coverage_pass(inst, phase_decompose(inst))
flow, phases = report.over_coverage
for p in phases:
    print(f"lambda = {p.lam}: securities {sorted(p.tight_securities)}, "
          f"accounts {sorted(p.tight_accounts)}")
print({k: str(v) for k, v in sorted(flow.flow.items())})

# Account 2 now holds five times its exposure.
print("inflow of account 2:", flow.inflow(2))

# Claim limits.  Security 1 is large but account 2 may only take 1 from it.
capped = make_instance(values=[6, 1], exposures=[2, 4],
                       edges=[(1, 1), (1, 2), (2, 2)], caps={(1, 2): 1})
report = phase_decompose(capped)
print("capped flow:", {k: str(v) for k, v in report.flow.flow.items()})
print("risk ratios:", {j: str(r) for j, r in report.risk_ratio.items()})
assert report.risk_ratio == oracle_risk_vector(capped)
