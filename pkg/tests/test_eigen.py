import numpy as np
import pytest

from nvscatter import Grid, PotentialSpec, SpectralSample, sample_potential, green_table, solve_mu, solve_nu
from nvscatter.eigen import EigenSolution, NystromOperator, mu_minus1, schrodinger_residual

LAMS = [(0.5 + 0.5j, -1), (1.5j, -1), (0.4 - 0.2j, 1), (1.7 + 0.3j, 1)]


def test_zero_potential(zero):
    s = SpectralSample(0.5 + 0.5j, -1)
    mu = solve_mu(zero, s)
    nu = solve_nu(zero, s)
    assert np.all(mu.field.values == 1.0)
    assert np.all(nu.field.values == 0.0)


@pytest.fixture(scope="module")
def fine_gauss():
    return sample_potential(PotentialSpec("gaussian", 0.5, 1.0), Grid(8.0, 64))


@pytest.mark.parametrize("lam,esign", LAMS)
def test_residuals(fine_gauss, lam, esign):
    gauss = fine_gauss
    s = SpectralSample(lam, esign)
    t = green_table(s, gauss.grid)
    for sol in (solve_mu(gauss, s, t), solve_nu(gauss, s, t)):
        assert sol.solver_residual <= 1e-8
        assert sol.schrodinger_residual <= 1e-3
        assert not sol.exceptional


def test_lu_and_gmres_agree(gauss):
    s = SpectralSample(0.5 + 0.5j, -1)
    t = green_table(s, gauss.grid)
    a = solve_mu(gauss, s, op=NystromOperator(gauss, t, method="lu"))
    b = solve_mu(gauss, s, op=NystromOperator(gauss, t, method="gmres"))
    assert np.max(np.abs(a.field.values - b.field.values)) < 1e-7


def test_perturbation_raises_residual(gauss):
    s = SpectralSample(0.5 + 0.5j, -1)
    mu = solve_mu(gauss, s)
    rng = np.random.default_rng(0)
    noisy = mu.field.values + 1e-2 * rng.standard_normal(mu.field.values.shape)
    bad = EigenSolution("mu", s, mu.field.with_values(noisy), mu.solver_residual)
    assert schrodinger_residual(bad, gauss) >= 10 * mu.schrodinger_residual


def test_mu_minus1_guards(gauss):
    with pytest.raises(ValueError):
        mu_minus1(gauss, [SpectralSample(10.0), SpectralSample(11.0)])
    with pytest.raises(ValueError):
        mu_minus1(gauss, [SpectralSample(2.0), SpectralSample(10.0), SpectralSample(12.0)])
