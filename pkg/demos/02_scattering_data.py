"""Eigenfunctions mu, nu and the scattering data (a, b, alpha, beta) of a
Gaussian well, together with the modified Fredholm determinant."""

# %%
import numpy as np

from nvscatter import Grid, PotentialSpec, SpectralSample, fredholm_delta, sample_potential, scatter_at, solve_mu
from nvscatter.scatter import check_delta_symmetry, check_det_dbar

grid = Grid(8.0, 64)
v = sample_potential(PotentialSpec("gaussian", amplitude=0.5, width=1.0), grid)
print("decay certificate q =", v.meta["q"])

# %% mu solves the Lippmann-Schwinger equation; its residual in the Schrodinger equation
s = SpectralSample(1.2 + 0.9j, -1)
mu = solve_mu(v, s)
print(f"solver residual {mu.solver_residual:.1e}, Schrodinger residual {mu.schrodinger_residual:.1e}")

# %% the four data at a handful of points
for lam in [0.5 + 0.5j, 1.5j, -0.7 + 0.2j, 1.2 + 0.9j]:
    q = scatter_at(v, SpectralSample(lam, -1))
    print(f"lam {lam}:  a {q.a:.4f}  b {q.b:.4f}  alpha {q.alpha:.4f}  beta {q.beta:.4f}")

# %% determinant: real, symmetric under lam -> -sgnE / conj(lam), tending to 1
for lam in [0.05, 0.5 + 0.5j, 30.0]:
    d1 = fredholm_delta(v, SpectralSample(lam, -1))
    d2 = fredholm_delta(v, SpectralSample(lam, -1).mirror)
    print(f"Delta({lam}) = {d1.delta:.6f}  symmetry defect {check_delta_symmetry([(d1, d2)])['max_defect']:.1e}")

# %% the d-bar law of Delta from a finite-difference stencil
for h in (0.08, 0.04, 0.02):
    print(f"step {h}: mismatch {check_det_dbar(v, 0.3 + 0.2j, -1, h)['mismatch']:.4f}")
