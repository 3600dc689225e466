import numpy as np
import pytest

from nvscatter import Grid, SpectralSample, ZeroProximityError, green_point, green_table
from nvscatter.green import GreenTable, green_residual


def test_sample_validation():
    with pytest.raises(ValueError):
        SpectralSample(0, -1)
    with pytest.raises(ValueError):
        SpectralSample(1.01, 1)
    with pytest.raises(ValueError):
        SpectralSample(0.5, 2)
    s = SpectralSample(0.3 + 0.4j, -1)
    assert abs(s.mirror.lam - 1 / np.conj(s.lam)) < 1e-15


@pytest.mark.parametrize("lam,esign", [(0.5 + 0.5j, -1), (1.5j, -1), (0.4 - 0.2j, 1), (1.7 + 0.3j, 1)])
def test_symbol_zeros(lam, esign):
    s = SpectralSample(lam, esign)
    for p in s.zeros():
        assert abs(s.symbol(p)) < 1e-12


@pytest.mark.parametrize("lam,esign", [(0.5 + 0.5j, -1), (1.2 + 0.9j, -1), (0.4 - 0.2j, 1), (1.7 + 0.3j, 1)])
def test_table_residual_bound(lam, esign):
    g = Grid(8.0, 64)
    t = green_table(SpectralSample(lam, esign), g, cache=False)
    assert t.residual <= 1e-3 / g.h**2


def test_ablation_is_worse(grid):
    s = SpectralSample(0.5 + 0.5j, -1)
    full = green_table(s, grid, cache=False)
    ablated = green_table(s, grid, correction=False, cache=False)
    assert ablated.residual > full.residual


def test_zero_table_residual_is_delta(grid):
    t = green_table(SpectralSample(0.5 + 0.5j, -1), grid, cache=False)
    z = GreenTable(t.sample, grid, t.g.with_values(np.zeros_like(t.g.values)))
    # Nyquist projection takes a few percent off the bare delta
    r = green_residual(z, exclude=-1)
    assert 0.9 < r * grid.h**2 <= 1.0


def test_table_matches_quadrature():
    # away from the origin; the nodes next to it carry band-limiting error
    grid = Grid(8.0, 64)
    s = SpectralSample(0.5 + 0.5j, -1)
    t = green_table(s, grid, cache=False)
    c = t.g.grid.N // 2
    for dj, dk in [(4, 4), (8, 8), (-10, 3)]:
        z = complex(dj * grid.h, dk * grid.h)
        ref = green_point(z, s)
        assert abs(t.g.values[c + dj, c + dk] - ref) <= 1e-3 * abs(ref)


def test_close_zeros_rejected():
    # for E < 0 the two zeros merge as |lam| -> 1
    with pytest.raises(ZeroProximityError):
        green_table(SpectralSample(1.01, -1), Grid(6.0, 32), cache=False)


def test_cache_roundtrip(tmp_path, monkeypatch, grid):
    monkeypatch.setenv("NVSCATTER_CACHE", str(tmp_path))
    s = SpectralSample(0.5 + 0.5j, -1)
    a = green_table(s, grid)
    b = green_table(s, grid)
    assert any(tmp_path.iterdir())
    assert np.array_equal(a.g.values, b.g.values)
