"""
The same problem as a quadratic program
=======================================

Minimising sum_j e_j r_j^2 over feasible flows gives a balanced flow.
This script builds the QP matrices, checks the objective identity and
compares a rounded floating-point solution with the exact one.
"""

from fractions import Fraction

import numpy as np

from ratioflow import make_instance, phase_decompose
from ratioflow.formats import qp_to_text
from ratioflow.model import FlowAssignment, mwsr_objective
from ratioflow.verification import (check_ratio_balance, gradient_check,
                                    qp_standard_form)

inst = make_instance(values=[8, 8], exposures=[12, 8, 16],
                     edges=[(1, 1), (1, 2), (2, 1), (2, 2), (2, 3)])
qp = qp_standard_form(inst)
print(qp_to_text(qp))

# Every column of K and V holds a single one.
assert (qp.K.sum(axis=0) == 1).all() and (qp.V.sum(axis=0) == 1).all()

exact = phase_decompose(inst)
print("exact risk ratios:", set(exact.risk_ratio.values()))
print("exact objective:  ", exact.objective, "=", float(exact.objective))

# A QP solver returns something like this, rounded to two decimals.
x = [Fraction(v) for v in ("4.88", "3.12", "0.46", "0.43", "7.11")]
rounded = FlowAssignment({e.key: v for e, v in zip(inst.edges, x)})
print("rounded objective:", float(mwsr_objective(inst, rounded)))
print("same value from the matrices:", float(qp.objective(x)))

# Rounding leaves tiny imbalances that an exact check still sees.
print("exact violations:", check_ratio_balance(inst, rounded))
print("within 0.01:     ", check_ratio_balance(inst, rounded, tol="0.01"))

# The gradient with respect to f_ij is -2 r_j.
print("gradient check:", gradient_check(inst, exact.flow))

floats = qp.as_float()
eig = np.linalg.eigvalsh(floats["qp_P"])
print("qp_P eigenvalues:", np.round(eig, 6))
