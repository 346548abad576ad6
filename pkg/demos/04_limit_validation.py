"""Scaled Bloch spectra approaching the two-scale limit.

The limit model couples the homogenized tensor with beta(lambda).  For a fixed
macroscopic wavevector the lowest non-zero Bloch eigenvalue of the scaled
problem converges to its prediction as the cell size shrinks.  The last part
lists the clamped soft eigenvalues that do not couple to beta: these show up as
nearly flat bands inside predicted full gaps.
"""

import numpy as np

from beamgap import build_square_example, validate_limit
from beamgap.dispersion import LimitModel
from beamgap.resonance import PARTICIPATION_TOL

g = build_square_example(45.0, attachment="direct")
h = 1 / 64
model = LimitModel(g, h)
report = validate_limit(g, [1 / 4, 1 / 8, 1 / 16, 1 / 32], (1.0, 0.0), h, model=model)
print(f"{'epsilon':>8} {'bloch':>12} {'limit':>12} {'rel dev':>10} {'order':>6}")
for r in report.rows:
    print(f"{r.epsilon:8.4f} {r.lambda_bloch:12.6f} {r.lambda_limit:12.6f} {r.rel_dev:10.2e} {r.order_estimate:6.2f}")

soft = model.soft
print("\nclamped soft eigenvalues below 20 and their coupling to beta")
for lam, p in zip(soft.eigenvalues, soft.participation):
    if lam > 20:
        break
    tag = "pole of beta" if p > PARTICIPATION_TOL else "decoupled (flat band)"
    print(f"  {lam:10.5f}  participation {p:9.2e}  {tag}")
