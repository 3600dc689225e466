import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvscatter import SpectralSample, denominator_roots, evolve_data, scatter_at, shift_data, soliton_audit
from nvscatter.dynamics import alpha_rate, evolution_phase, sextic_coefficients, soliton_a_closed_form
from nvscatter.scatter import ScatteringQuad

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def _quad(lam, esign=-1):
    rng = np.random.default_rng(1)
    a, b, al, be, v0 = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    return ScatteringQuad(SpectralSample(lam, esign), a, b, al, be, v0)


def test_shift_is_a_group_action():
    q = _quad(0.6 + 0.4j)
    e1, e2 = 1.0 - 0.5j, -0.3 + 2.0j
    two = shift_data(shift_data(q, e1), e2)
    one = shift_data(q, e1 + e2)
    for k in ("a", "b", "alpha", "beta"):
        assert abs(getattr(two, k) - getattr(one, k)) < 1e-12


def test_shift_preserves_moduli():
    q = _quad(1.3 - 0.2j)
    s = shift_data(q, 3 + 4j)
    assert s.a == q.a
    assert abs(abs(s.b) - abs(q.b)) < 1e-14


def test_evolution_composes():
    q = _quad(0.8 + 0.9j)
    a = evolve_data(evolve_data(q, 0.3), 0.45)
    b = evolve_data(q, 0.75)
    for k in ("a", "b", "alpha", "beta"):
        assert abs(getattr(a, k) - getattr(b, k)) < 1e-12
    z = evolve_data(q, 0.0)
    assert z.b == q.b and z.alpha == q.alpha


@pytest.mark.parametrize("esign", [-1, 1])
def test_phase_is_real_and_rate_formula(esign):
    s = SpectralSample(0.7 + 0.3j, esign)
    assert np.isfinite(evolution_phase(s))
    lam = s.lam
    assert abs(alpha_rate(s) - 3j * s.sqrtE**3 * (lam**3 - lam**-3)) < 1e-14


@pytest.mark.parametrize("esign", [-1, 1])
def test_roots_at_rest_are_sixth_roots_of_unity(esign):
    rs = denominator_roots(0, esign)
    assert rs.on_T == 6
    assert np.max(np.abs(rs.roots**6 - 1)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(cplx, st.sampled_from([-1, 1]))
def test_at_least_two_roots_on_T(c, esign):
    rs = denominator_roots(c, esign)
    assert rs.on_T >= 2
    assert np.max(np.abs(np.polyval(sextic_coefficients(c, esign), rs.roots))) < 1e-9


def test_closed_form_a_near_root():
    rs = denominator_roots(1 + 1j, -1)
    with pytest.raises(ValueError):
        soliton_a_closed_form(SpectralSample(rs.roots[0], -1), 1 + 1j, 1.0)


def test_audit_zero_is_consistent(zero):
    rep = soliton_audit(zero, 0.5 + 0.5j, [0.5 + 0.5j, 1.5j], -1)
    assert rep["verdict"] == "consistent" and rep["dominant_failure"] is None
    assert [s["step"] for s in rep["steps"]] == ["b vanishes", "a matches closed form", "vhat(0) vanishes"]


def test_audit_gaussian_fails_on_b(gauss):
    rep = soliton_audit(gauss, 0.5 + 0.5j, [0.5 + 0.5j, 1.5j], -1)
    assert rep["verdict"] == "not a soliton"
    assert rep["dominant_failure"] == "b vanishes"


def test_audit_b_override_moves_failure(gauss):
    rep = soliton_audit(gauss, 0.5 + 0.5j, [0.5 + 0.5j, 1.5j], -1, b_override=0.0)
    assert rep["dominant_failure"] == "a matches closed form"
