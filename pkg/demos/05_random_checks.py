"""
Checking the solver on random instances
=======================================

The risk vector is unique, so an independent brute-force oracle must agree
with the phase algorithm.  Random maximum flows never beat its objective.
"""

import random
import time

from ratioflow import make_instance, phase_decompose
from ratioflow.verification import local_opt_probe, oracle_risk_vector

rng = random.Random(7)
start = time.perf_counter()
agree = probes = 0
for _ in range(200):
    ns, na = rng.randint(1, 7), rng.randint(1, 7)
    inst = make_instance([rng.randint(1, 20) for _ in range(ns)],
                         [rng.randint(1, 20) for _ in range(na)],
                         [(i, j) for i in range(1, ns + 1)
                          for j in range(1, na + 1) if rng.random() < .5])
    report = phase_decompose(inst)
    agree += report.risk_ratio == oracle_risk_vector(inst)
    probes += local_opt_probe(inst, report.flow, trials=20, rng=rng).ok
print(f"oracle agrees on {agree}/200, probe finds nothing better on "
      f"{probes}/200 ({time.perf_counter() - start:.1f} s)")
