"""Direct and inverse Faddeev scattering at fixed nonzero energy, with
numerical checks of the Novikov-Veselov evolution laws."""

from .grid import ComplexField, Grid, RealField, make_grid
from .green import GreenTable, SpectralSample, ZeroProximityError, green_point, green_table
from .potential import PotentialSpec, WField, sample_potential, solve_w
from .eigen import EigenSolution, ExceptionalPointError, solve_mu, solve_nu
from .scatter import ScatteringQuad, fredholm_delta, scatter_at
from .dynamics import denominator_roots, evolve_data, shift_data, soliton_audit
from .nv import dyn_crosscheck, nv_evolve
from .invert import forward_data, reconstruct_v

__version__ = "0.1.0"
