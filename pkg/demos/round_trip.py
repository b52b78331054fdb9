"""Reconstruct a potential from rank-1 data, then scatter it forward again."""
import numpy as np

from istnls import (
    ComplexField1D,
    Grid1D,
    Rank1Data,
    forward_scattering,
    nystrom_reconstruct,
    operator_norm,
    reconstruct_rank1,
)

g = Grid1D.from_bounds(-8, 8, 128)
x = g.points
f = ComplexField1D(g, np.exp(-(x - 1) ** 2) * np.exp(0.3j * x)).normalized()
h = ComplexField1D(g, np.exp(-(x + 0.5) ** 2 / 2) * (1 + 0.2j * x)).normalized()
data = Rank1Data(0.5, f, h)

u = reconstruct_rank1(data)
u_ny = nystrom_reconstruct(data.kernel())
print(f"closed form vs Nystrom:  max|diff| = {np.abs(u.values - u_ny.values).max():.2e}")

K = forward_scattering(u)
print(f"kernel norm: input {operator_norm(data.kernel()):.8f}, recovered {operator_norm(K):.8f}")
print(f"max kernel error: {np.abs(K.kernel - data.kernel().kernel).max():.2e}")
