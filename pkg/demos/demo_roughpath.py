# Rough-path basics: lifting piecewise-linear paths, Chen's relation,
# Levy area, and nested Brownian refinement.
#
# Run: python demos/demo_roughpath.py

import numpy as np

from rough_scl import (
    PwlPath, brownian_pwl, dyadic_approx, holder_norm, lift_pwl, rho_dist,
    time_reverse,
)

# The L-shaped path (0,0) -> (1,0) -> (1,1) is the classic Levy-area example:
# the second-level signature is the area swept between the path and its chord.
L = PwlPath([0.0, 1.0, 2.0], [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
z = lift_pwl(L)
g = z.node(2)
print("L-path level 1:", g.level1)
print("L-path level 2:\n", g.level2)
print("Levy area:", g.levy_area()[0, 1], "(exactly 1/2)")

# Chen's relation is exact for lifted PWL paths on every grid triple.
print("max Chen defect:", z.chen_defect())
print("max geometric defect:", z.geometric_defect())

# Time reversal flips the Levy area and is an involution.
rz = time_reverse(z, 2.0)
print("reversed Levy area:", rz.node(2).levy_area()[0, 1])

# Brownian drivers form a nested dyadic family: refining and coarsening
# commute exactly, and consecutive lifts approach each other in the
# inhomogeneous alpha-Hoelder metric.
alpha = 0.35
print("\nlevel   holder_norm   rho_dist(level, level+1)")
for n in range(4, 9):
    zn = lift_pwl(brownian_pwl(5, 2, n), alpha=alpha)
    zn1 = lift_pwl(brownian_pwl(5, 2, n + 1), alpha=alpha)
    assert np.allclose(dyadic_approx(brownian_pwl(5, 2, n + 1), n).points,
                       brownian_pwl(5, 2, n).points)
    print(f"{n:5d}   {holder_norm(zn, alpha):11.4f}   {rho_dist(zn, zn1, alpha):.4f}")
