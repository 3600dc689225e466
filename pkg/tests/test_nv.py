import numpy as np
import pytest

from nvscatter import Grid, PotentialSpec, RealField, sample_potential
from nvscatter import nv
from nvscatter.nv import EvolutionError, dyn_crosscheck, linear_symbol, nv_evolve, nv_rhs


@pytest.fixture(scope="module")
def v0():
    return sample_potential(PotentialSpec("gaussian", 0.5, 1.0), Grid(10.0, 64))


def test_zero_stays_zero(zero):
    st = nv_evolve(zero, 0.1, 1e-2, -1)
    assert np.all(st.v.values == 0)


def test_rhs_is_real_and_zero_free(v0):
    r = nv_rhs(v0, -1)
    assert np.isrealobj(r.values)
    assert abs(np.sum(r.values)) * v0.grid.h**2 < 1e-12


@pytest.mark.parametrize("esign", [-1, 1])
def test_single_mode_dispersion(esign):
    # a small cosine mode: rhs is linear, with the analytic multiplier
    g = Grid(2 * np.pi, 32)
    m1, m2 = 2, 1
    xi = complex(m1, m2) * 2 * np.pi / (2 * g.R)
    z = g.z
    eps = 1e-7
    u = eps * np.cos(xi.real * z.real + xi.imag * z.imag)
    r = nv_rhs(RealField(g, u), esign).values
    # for exp(i xi.x), symbol -i (p^3 + conj p^3)(1 - 3E/|p|^2), p = xi1 + i xi2
    L = -1j * (xi**3 + np.conj(xi) ** 3) * (1 - 3 * esign / abs(xi) ** 2)
    expect = eps * np.real(L * np.exp(1j * (xi.real * z.real + xi.imag * z.imag)))
    assert np.max(np.abs(r - expect)) < 1e-3 * np.max(np.abs(expect))


def test_linear_symbol_is_imaginary():
    L = linear_symbol(Grid(5.0, 32), -1)
    assert np.max(np.abs(L.real)) == 0
    assert L[0, 0] == 0


def test_mass_conservation(v0):
    st = nv_evolve(v0, 0.02, 2e-3, -1)
    assert st.mass_drift() <= 1e-6
    assert len(st.mass) == 11


def test_fourth_order(v0):
    t = 0.01
    a = nv_evolve(v0, t, t / 2, -1).v.values
    b = nv_evolve(v0, t, t / 4, -1).v.values
    c = nv_evolve(v0, t, t / 8, -1).v.values
    ratio = np.max(np.abs(a - b)) / np.max(np.abs(b - c))
    assert 10 < ratio < 25


def test_time_reversal(v0):
    # RK4 is not symmetric, so the round trip error is truncation, shrinking like dt^4
    def trip(dt):
        fwd = nv_evolve(v0, 0.01, dt, -1)
        return np.max(np.abs(nv_evolve(fwd.v, -0.01, dt, -1).v.values - v0.values))

    e1, e2 = trip(1e-3), trip(5e-4)
    assert e1 / e2 > 10
    assert trip(2.5e-4) < 1e-11 * np.max(np.abs(v0.values))


def test_bad_step(v0):
    with pytest.raises(ValueError):
        nv_evolve(v0, 0.1, 0.0, -1)
    with pytest.raises(ValueError):
        nv_evolve(v0, 0.1, 0.01, -1, nonlocal_form="other")


def test_blowup_detector(v0, monkeypatch):
    monkeypatch.setattr(nv, "BLOWUP_FACTOR", 0.5)
    with pytest.raises(EvolutionError):
        nv_evolve(v0, 0.01, 1e-3, -1)


def test_leak_detector(v0, monkeypatch):
    monkeypatch.setattr(nv, "LEAK_TOL", 1e-30)
    with pytest.raises(EvolutionError, match="leakage"):
        nv_evolve(v0, 0.01, 1e-3, -1)


def test_crosscheck_zero(zero):
    rep = dyn_crosscheck(zero, [0.5 + 0.5j], 1e-3)
    assert rep["worst_mismatch"] == 0.0


def test_crosscheck_zero_mass_potential():
    # vhat(0) = 0: the evolved tail is |z|^-4 and every law holds
    g = Grid(12.0, 96)
    r2 = np.abs(g.z) ** 2
    v = RealField(g, 0.5 * (1 - r2) * np.exp(-r2))
    rep = dyn_crosscheck(v, [0.5 + 0.5j, 1.5j], 1e-3)
    assert rep["worst_mismatch"] < 1e-3
