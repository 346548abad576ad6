"""Soft-segment resonance matrix and the gap map it induces.

For a clamped soft segment of half-length a the eigenvalues of beta(lambda)
are known in closed form.  The finite-element beta of the square example is
compared against them, then the sign pattern of beta is scanned for bands,
weak gaps and full gaps.
"""

import numpy as np

from beamgap import beta1_closed, beta2_closed, build_square_example, scan_gaps
from beamgap.resonance import SoftProblem, compare_scans

a = 0.5
g = build_square_example(30.0, a)
problem = SoftProblem(g, a / 128)
R = np.column_stack([g.beams[-1].tangent, g.beams[-1].normal])

print(f"{'lambda':>8} {'beta1 FE':>14} {'beta1 exact':>14} {'beta2 FE':>14} {'beta2 exact':>14}")
for lam in (0.25, 0.5, 2.0, 5.0, 8.0):
    D = R.T @ problem.beta_from(lam, problem.solve(lam)) @ R
    print(f"{lam:8.2f} {D[0, 0]:14.8f} {beta1_closed(lam, a):14.8f} {D[1, 1]:14.8f} {beta2_closed(lam, a):14.8f}")

closed = scan_gaps(a, 200.0, 2000, "closed-form")
print("\nclosed-form gap map up to lambda = 200")
for iv in closed:
    print(f"  [{iv.lo:9.4f}, {iv.hi:9.4f}]  {iv.classification.value:<9} ends at {iv.hi_type}")

fe = scan_gaps(build_square_example(45.0, a), 200.0, 2000, "fe", h=a / 128)
agree, shift = compare_scans(closed, fe)
print(f"\nFE scan agrees: {agree}, largest boundary shift {shift:.2e}")
