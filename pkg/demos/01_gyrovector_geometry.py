"""
Geometry of constant-curvature spaces
=====================================

One set of formulas covers the Poincare ball (K < 0), flat space (K = 0)
and the stereographic sphere (K > 0). This walk-through shows how distances
behave in each, and that the curved formulas fold smoothly into the flat
ones as K goes to 0.
"""

import numpy as np

from dyernie import geometry as g

# Two points on a ray from the origin. In the ball the second one is close to
# the boundary, so its distance from the origin is much larger than its norm.
x = np.array([0.5, 0.0])
y = np.array([0.95, 0.0])
for K in (-1.0, 0.0, 1.0):
    print(f"K={K:+.1f}  d(0,x)={g.distance(np.zeros(2), x, K):.4f}  d(x,y)={g.distance(x, y, K):.4f}")

# Distances blow up near the boundary of the unit ball: this is the room
# that lets a tree with exponentially many leaves embed with low distortion.
print("\nnorm   d_hyp(0, r e1)")
for r in (0.5, 0.9, 0.99, 0.999):
    print(f"{r:<6} {g.distance(np.zeros(2), np.array([r, 0.0]), -1.0):.3f}")

# Moebius addition is not commutative, but the left inverse always works.
a, b = np.array([0.3, 0.2]), np.array([-0.1, 0.6])
print("\na (+) b =", g.mobius_add(a, b, -1.0))
print("b (+) a =", g.mobius_add(b, a, -1.0))
print("(-a) (+) a =", g.mobius_add(-a, a, -1.0))

# exp and log maps at a base point invert each other.
v = np.array([0.4, -0.7])
for K in (-1.0, 1.0):
    back = g.log_map(a, g.exp_map(a, v, K), K)
    print(f"K={K:+.0f} log_a(exp_a(v)) - v = {np.abs(back - v).max():.1e}")

# Small curvature: the distance approaches twice the Euclidean one
# (the factor 2 is the conformal factor at the origin).
print("\nK        d_K(a,b)   2|a-b|")
for K in (-1e-1, -1e-3, -1e-6, 1e-6, 1e-3):
    print(f"{K:+.0e}  {g.distance(a, b, K):.6f}  {2 * np.linalg.norm(a - b):.6f}")
