# The regularized pathwise solver: shock formation under a rough driver,
# conservation, the entropy-defect ledger, and the tent-path cancellation
# phenomenon.
#
# Run: python demos/demo_pathwise_solver.py

import numpy as np

from rough_scl import Grid, brownian_pwl, builtin, initial_data, solve_pathwise
from rough_scl.roughpath import PwlPath

flux = builtin("burgers_modulated")
grid = Grid.create((-6.0, 6.0), 400, (-1.6, 1.6), 80)
u0 = initial_data("cosine_bump", grid, center=[0.0], width=1.5, height=1.0)

snaps, ledger = solve_pathwise(u0, flux, brownian_pwl(42, 1, 6), grid)
uT = snaps[-1]
print(f"mass drift:        {abs(uT.mass(grid) - u0.mass(grid)):.2e}")
print(f"L1(T) - L1(0):     {uT.l1(grid) - u0.l1(grid):+.2e}  (never positive)")
print(f"entropy defect:    {ledger.total_mass:.4f}  clamp residual "
      f"{ledger.total_clamp_residual:.2e}")
print(f"entropy balance:   diss + 0.5|u(T)|^2 = "
      f"{ledger.total_mass + 0.5 * uT.l2sq(grid):.4f} <= "
      f"0.5|u0|^2 + M|u0|_1")

# A tent driver goes up and comes back; before characteristics cross, the
# whole evolution cancels and only O(dx) scheme error remains.
xflux = builtin("burgers_xindep")
print("\ntent cancellation (pre-shock, height 0.4):")
for nx in (100, 200, 400):
    g = Grid.create((-4.0, 4.0), nx, (-0.6, 1.6), 40)
    v0 = initial_data("cosine_bump", g, center=[0.0], width=1.0, height=1.0)
    tent = PwlPath([0.0, 0.5, 1.0], np.array([[0.0], [0.4], [0.0]]))
    out, _ = solve_pathwise(v0, xflux, tent, g)
    err = np.abs(out[-1].u - v0.u).sum() * g.dx[0]
    print(f"  nx={nx:4d}: |u(T) - u0|_1 = {err:.5f}")

# With a tall tent the characteristics cross on the way up: the shock
# dissipates information and the return trip cannot restore it.
g = Grid.create((-4.0, 4.0), 400, (-0.6, 1.6), 40)
v0 = initial_data("cosine_bump", g, center=[0.0], width=1.0, height=1.0)
tall = PwlPath([0.0, 0.5, 1.0], np.array([[0.0], [2.5], [0.0]]))
out, led = solve_pathwise(v0, xflux, tall, g)
print(f"post-shock: |u(T) - u0|_1 = {np.abs(out[-1].u - v0.u).sum() * g.dx[0]:.4f}, "
      f"dissipated mass = {led.total_mass:.4f}")
