"""
Observed order of the density solver
====================================

Zero drift, bump data, dt = 4 h^2.  Halving h should cut the max-norm
error at t = 0.25 by about four.
"""

import numpy as np

import kmv
from kmv.fourier import evaluate, project_initial

T = 0.25
prev = None
print(f"{'M':>5} {'h':>10} {'dt':>10} {'error':>10} {'order':>7}")
for M in (50, 100, 200, 400):
    grid = kmv.make_space_grid(M)
    tgrid = kmv.make_time_grid(T, int(round(T / (4 * grid.h**2))))
    m0 = kmv.bump_initial_density(grid)
    traj = kmv.solve_linear_fpk(m0, kmv.MeanFieldPath.constant(tgrid), kmv.zero_drift(), grid, tgrid)
    exact, _ = evaluate(project_initial(m0), grid.x, T)
    err = np.abs(traj.values[-1] - exact).max()
    order = np.log(prev[1] / err) / np.log(prev[0] / grid.h) if prev else float("nan")
    print(f"{M:>5} {grid.h:>10.3e} {tgrid.dt:>10.3e} {err:>10.3e} {order:>7.3f}")
    prev = (grid.h, err)
