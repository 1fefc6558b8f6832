"""Majorant bounds behind the convergence of the Borel-plane fixed point.

The solution's Borel transform is built grade by grade, v = sum_l v_l, and each
leading coefficient is bounded by M_l Theta^(l)(X) / l!, where Theta is a fixed
majorant series and M_l comes from an implicit scalar recursion.  This script
builds Theta, checks its product relations, and audits the bounds on the
Burgers fixture.  Halving the bounds must make the audit fail.
"""

import numpy as np

from multisum import AuditFailure, convolution_fixpoint, normalize
from multisum.fixtures import burgers_problem
from multisum.majorant import (
    bound_audit,
    composition_audit,
    derivative_ratio_audit,
    fit_constants,
    implicit_witness,
    m_sequence,
    theta_build,
    theta_relations_audit,
)

mj = theta_build(200)
print(f"Theta constant c = {mj.c:.4f}")
print("first Theta coefficients:", np.round(mj.coeffs(5), 5))
print("product relations, worst slack:", theta_relations_audit(mj, 200)["max_slack"])
print("derivative ratio, worst slack:", derivative_ratio_audit(mj, ell_max=10, N=100)["max_slack"])
print("compositions of 3 factors, worst slack:", max(composition_audit(mj, 3, 4, N=50)["max_slack"].values()))

problem = burgers_problem()
np_ = normalize(problem)
L = 10
mj_r = theta_build(200, R=problem.R1)
cst = fit_constants(np_, 1.0, mj_r)
graded = convolution_fixpoint(np_, 1.0, 0.0, L)
ms = m_sequence(cst, L)
print("\nM_l:", np.round([ms[0, ell] for ell in range(1, L + 1)], 4))

wit = implicit_witness(cst.G_prime, cst.M1, L, ms)
print("implicit-function witness equals M_l:", wit.equal)

report = bound_audit(graded, ms, mj_r)
print(f"bound audit: worst slack {report['max_slack']:.3f}, failures {len(report['failures'])}")

try:
    bound_audit(graded, ms.scaled(0.5), mj_r)
except AuditFailure as exc:
    print("halved bounds rejected, witness:", exc.witness)
