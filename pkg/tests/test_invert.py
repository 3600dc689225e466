import numpy as np
import pytest

from nvscatter import Grid
from nvscatter.invert import (
    CauchyTransform,
    ContractionError,
    DbarData,
    annulus,
    reconstruct_v,
    ring_coefficient,
    solve_dbar_mu,
)


def _bump(n):
    s, p = annulus(n)
    lam = np.exp(s[:, None] + 1j * p[None, :])
    l0, w = 2 + 0.5j, 0.3
    g = np.exp(-np.abs(lam - l0) ** 2 / w**2)
    return s, p, g, -(lam - l0) / w**2 * g


def test_annulus_cells_are_square():
    s, p = annulus(64, 0.1, 10.0)
    assert np.isclose(s[1] - s[0], p[1] - p[0])
    assert np.exp(s[0]) == pytest.approx(0.1) and np.exp(s[-1]) >= 10.0


def test_cauchy_inverts_dbar():
    # C[d g / d conj(lam)] = g for g decaying inside the annulus
    errs = []
    for n in (128, 256):
        s, p, g, f = _bump(n)
        errs.append(np.max(np.abs(CauchyTransform(s, p)(f) - g)))
    assert errs[0] < 0.05
    assert errs[0] / errs[1] > 3


def test_cauchy_batches():
    s, p, g, f = _bump(64)
    C = CauchyTransform(s, p)
    both = C(np.stack([f, 2 * f]))
    assert np.allclose(both[1], 2 * C(f))


def test_ring_coefficient():
    rho = 5.0
    phi = 2 * np.pi * np.arange(32) / 32
    lam = rho * np.exp(1j * phi)
    assert ring_coefficient(1 + (0.3 - 0.1j) / lam + 0.05 / lam**2, rho) == pytest.approx(0.3 - 0.1j)
    with pytest.raises(ValueError):
        ring_coefficient(1 + 0.1 * lam, rho)


def test_positive_energy_not_implemented():
    s, p = annulus(16)
    with pytest.raises(NotImplementedError):
        DbarData(s, p, np.zeros((s.size, p.size), complex), esign=1)


def test_zero_data_reconstructs_zero():
    s, p = annulus(32)
    data = DbarData(s, p, np.zeros((s.size, p.size), complex))
    rec = reconstruct_v(data, Grid(4.0, 16))
    assert np.all(rec.v.values == 0) and rec.imag_defect == 0 and rec.born_parameter == 0


def test_large_data_does_not_contract():
    s, p = annulus(32)
    data = DbarData(s, p, np.full((s.size, p.size), 400.0 + 0j))
    with pytest.raises(ContractionError):
        solve_dbar_mu(data, [0.5 + 0.5j], max_iter=60)


def test_jsonl_lines():
    s, p = annulus(16)
    data = DbarData(s, p, np.ones((s.size, p.size), complex))
    assert data.to_jsonl().count("\n") == s.size * p.size
