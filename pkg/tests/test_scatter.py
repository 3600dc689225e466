import numpy as np
import pytest

from nvscatter import Grid, PotentialSpec, SpectralSample, fredholm_delta, sample_potential, scatter_at
from nvscatter.dynamics import shift_data
from nvscatter.scatter import check_delta_symmetry, check_det_dbar, check_mu_dbar, write_csv, write_jsonl


def test_zero_potential_data(zero):
    s = SpectralSample(0.7 + 0.2j, -1)
    q = scatter_at(zero, s)
    assert q.a == q.b == q.alpha == q.beta == 0
    assert fredholm_delta(zero, s).delta == 1


@pytest.mark.parametrize("lam,esign", [(0.5 + 0.5j, -1), (1.2 + 0.9j, -1), (0.4 - 0.2j, 1), (1.7 + 0.3j, 1)])
def test_determinant_real_and_symmetric(gauss, lam, esign):
    s = SpectralSample(lam, esign)
    d1 = fredholm_delta(gauss, s)
    d2 = fredholm_delta(gauss, s.mirror)
    assert abs(d1.delta.imag) / abs(d1.delta) <= 1e-3
    assert check_delta_symmetry([(d1, d2)])["max_defect"] <= 1e-2


def test_determinant_lu_matches_eigenvalues(gauss):
    s = SpectralSample(0.5 + 0.5j, -1)
    a = fredholm_delta(gauss, s, method="lu").delta
    b = fredholm_delta(gauss, s, method="eig").delta
    assert abs(a - b) <= 1e-9 * abs(a)


def test_symmetry_rejects_wrong_partner(gauss):
    s = SpectralSample(0.5 + 0.5j, -1)
    d = fredholm_delta(gauss, s)
    with pytest.raises(ValueError):
        check_delta_symmetry([(d, d)])


def test_radial_potential_data_is_rotation_invariant(gauss):
    lam = 0.6 + 0.3j
    b = [scatter_at(gauss, SpectralSample(lam * np.exp(1j * t), -1)).b for t in (0.0, 0.7, 2.0)]
    assert max(abs(x - b[0]) for x in b) <= 1e-3 * abs(b[0])


def test_grid_shift_matches_closed_form():
    g = Grid(8.0, 64)
    eta = complex(4 * g.h, -2 * g.h)
    v = sample_potential(PotentialSpec(amplitude=0.5), g)
    vs = sample_potential(PotentialSpec(amplitude=0.5, center=eta), g)
    s = SpectralSample(0.5 + 0.5j, -1)
    cf, re = shift_data(scatter_at(v, s), eta), scatter_at(vs, s)
    for k in ("a", "b", "alpha", "beta"):
        assert abs(getattr(cf, k) - getattr(re, k)) <= 1e-8 * max(abs(getattr(re, k)), 1e-12)


def test_det_dbar_stencil_convergence(gauss):
    # small |rhs| at this lam makes the stencil truncation visible
    lam = 0.3 + 0.2j
    m = [check_det_dbar(gauss, lam, -1, h)["mismatch"] for h in (0.08, 0.04, 0.02)]
    assert m[-1] <= 0.05
    assert m[0] / m[1] > 3 and m[1] / m[2] > 3


def test_mu_dbar(gauss):
    assert check_mu_dbar(gauss, 1.2 + 0.9j, -1, 0.01)["error"] <= 0.05


def test_stencil_must_not_cross_T(gauss):
    with pytest.raises(ValueError):
        check_det_dbar(gauss, 0.995, -1, 0.01)


def test_writers(tmp_path, gauss):
    q = scatter_at(gauss, SpectralSample(0.5 + 0.5j, -1))
    write_jsonl(tmp_path / "q.jsonl", [q])
    write_csv(tmp_path / "q.csv", [q])
    assert (tmp_path / "q.jsonl").read_text().count("\n") == 1
    assert len((tmp_path / "q.csv").read_text().splitlines()) == 2
