"""Why there are no decaying NV solitons: the sextic always has roots on
the unit circle, and every concrete potential fails the audit at b."""

# %%
import numpy as np

from nvscatter import Grid, PotentialSpec, RealField, denominator_roots, sample_potential, soliton_audit

rng = np.random.default_rng(0)
for c in [0, 1 + 1j, 8 * np.exp(2j), *(10 * rng.random(3) * np.exp(2j * np.pi * rng.random(3)))]:
    for esign in (-1, 1):
        rs = denominator_roots(c, esign)
        print(f"c = {complex(c):.2f}, E = {esign:+d}: {rs.on_T} roots on |lam| = 1")

# %% the audit on a zero and a nonzero potential
g = Grid(10.0, 64)
lams = [0.5 + 0.5j, 1.5j, 1.2 + 0.9j]
for name, v in [("zero", RealField(g, np.zeros((64, 64)))),
                ("ring", sample_potential(PotentialSpec("ring", 0.5, 1.5), g))]:
    rep = soliton_audit(v, 0.7 + 0.2j, lams, -1)
    print(name, rep["verdict"], "| first failure:", rep["dominant_failure"])
    for st in rep["steps"]:
        print(f"   {st['step']:24s} {st['value']:.2e}  tol {st['tol']:.0e}")
