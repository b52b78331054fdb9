"""Cauchy problem with a time-dependent boundary potential q(x, t).

The scattering data evolve by a linear Schrodinger flow with potential q,
so their operator norm, and with it int |u|^2, stays fixed while the
solution itself changes shape.
"""
import numpy as np

from istnls import BoundaryData, Grid1D, Grid2D, conserved_norm, gaussian_data, solve_cauchy

g = Grid1D.from_bounds(-20, 20, 256)
G = Grid2D(g, g)
boundary = BoundaryData(q_plus=lambda x, t: 0.5 * np.cos(x) * np.exp(-t))
free = BoundaryData.zero()
data = gaussian_data(G, 0.5)
times = [0.0, 0.25, 0.5, 0.75, 1.0]

with_q = solve_cauchy(data, boundary, times, dt=1e-3)
without = solve_cauchy(data, free, times, dt=1e-3)
print(" t     int|u|^2        max|u| (q)   max|u| (free)   max|u_q - u_free|")
for a, b in zip(with_q, without):
    diff = np.abs(a.u.values - b.u.values).max()
    print(f"{a.t:4.2f}  {conserved_norm(a.u):.12f}  {np.abs(a.u.values).max():.6f}"
          f"     {np.abs(b.u.values).max():.6f}       {diff:.3e}")
