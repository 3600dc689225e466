"""Round trip: forward data b on an annulus, the d-bar fixed point, and
the reconstructed potential.  Takes about a minute."""

# %%
import numpy as np

from nvscatter import Grid, PotentialSpec, sample_potential
from nvscatter.invert import forward_data, reconstruct_v

grid = Grid(8.0, 64)
v = sample_potential(PotentialSpec(amplitude=0.2), grid)

# radial potential: b depends on |lam| only, one solve per radius
data = forward_data(v, n_phi=64, radial=True)
print(f"{data.b.shape} samples, {data.filled} filled by spline near |lam| = 1")

# %%
rec = reconstruct_v(data, grid)
err = np.linalg.norm(rec.v.values - v.values) / np.linalg.norm(v.values)
print(f"Born parameter {rec.born_parameter:.3f}, sweeps {rec.sweeps}")
print(f"relative L2 error {err:.2%}, imaginary defect {rec.imag_defect:.2%}")
c = grid.N // 2
print("centre row, true vs reconstructed:")
print(np.round(v.values[c, c - 6:c + 7:2], 4))
print(np.round(rec.v.values[c, c - 6:c + 7:2], 4))
