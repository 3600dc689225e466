"""Pseudospectral Novikov-Veselov stepping: conservation, order and the
boundary monitor."""

# %%
import numpy as np

from nvscatter import Grid, PotentialSpec, nv_evolve, sample_potential
from nvscatter.nv import EvolutionError

v0 = sample_potential(PotentialSpec(amplitude=0.5), Grid(10.0, 64))
st = nv_evolve(v0, t_end=0.05, dt=1e-3, esign=-1)
print(f"t = {st.t}, mass drift {st.mass_drift():.1e}, max|v| {np.abs(st.v.values).max():.4f}")

# %% step-doubling: the error falls 16x per halving
t = 0.01
runs = [nv_evolve(v0, t, t / n, -1).v.values for n in (2, 4, 8)]
d1, d2 = np.abs(runs[0] - runs[1]).max(), np.abs(runs[1] - runs[2]).max()
print(f"successive differences {d1:.2e}, {d2:.2e}, ratio {d1 / d2:.1f}")

# %% the algebraic tail reaches the box edge quickly; the monitor stops the run
try:
    nv_evolve(v0, 1.0, 1e-3, -1)
except EvolutionError as exc:
    print("stopped:", exc)
