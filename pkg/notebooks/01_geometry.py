"""
Distances in the complex unit ball
==================================

A short tour of the metric: how distance grows towards the boundary, and how
the ball contains both the Poincare disc and a real Klein ball as slices.
"""

import numpy as np

from cxhyp import distance, hermitian_form, klein_real_distance, metric_scale, poincare_line_distance

# the origin is the natural reference point; the form there is -1
origin = np.zeros(3, dtype=complex)
print("<0,0> =", hermitian_form(origin, origin))

# moving radially, distance blows up as the radius approaches 1
for r in (0.1, 0.5, 0.9, 0.99, 0.999):
    z = np.array([r, 0, 0], dtype=complex)
    print(f"r={r:<6} d(0, z)={distance(origin, z):.4f}   2*atanh(r)={2 * np.arctanh(r):.4f}")

# one complex coordinate is a copy of the Poincare disc
z, w = 0.3 + 0.4j, -0.2 + 0.1j
print("complex line:", distance([z], [w]), poincare_line_distance(z, w))

# real vectors form a Klein ball
x, y = np.array([0.5, 0.0]), np.array([0.0, 0.5])
print("real slice:  ", distance(x + 0j, y + 0j), klein_real_distance(x, y))

# distance only depends on |z_j|, so a global phase changes nothing
rng = np.random.default_rng(0)
a = rng.normal(size=4) + 1j * rng.normal(size=4)
b = rng.normal(size=4) + 1j * rng.normal(size=4)
a, b = 0.4 * a / np.linalg.norm(a), 0.7 * b / np.linalg.norm(b)
phase = np.exp(0.8j)
print("phase invariance:", distance(a, b), distance(phase * a, phase * b))

# conformal mode gives the gradient rescale directly; quadratic mode gives the
# Bergman form on a direction, and the optimiser divides by it
for r in (0.0, 0.5, 0.9):
    p = np.array([r, 0], dtype=complex)
    q = metric_scale(p, "quadratic_form", [1, 0])
    print(f"r={r}: conformal {metric_scale(p):.4f}  1/quadratic {1 / q:.4f}")
