import numpy as np
import pytest

from nvscatter import Grid, PotentialSpec, RealField, sample_potential, solve_w
from nvscatter.potential import DecayError, check_w_asymptotics, validate_decay


@pytest.mark.parametrize("family", ["gaussian", "stretched-rational", "ring"])
def test_families_sample_and_certify(family):
    g = Grid(40.0 if family == "stretched-rational" else 8.0, 128 if family == "stretched-rational" else 64)
    v = sample_potential(PotentialSpec(family, 0.7, 1.0), g)
    assert np.isrealobj(v.values)
    rep = validate_decay(v, v.meta["q"], v.meta["eps"])
    assert rep["passed"]


def test_decay_rejects_tiny_box():
    with pytest.raises(DecayError):
        sample_potential(PotentialSpec("gaussian", 1.0, 1.0), Grid(2.0, 32))


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        PotentialSpec("square")
    with pytest.raises(ValueError):
        PotentialSpec(width=0.0)
    s = PotentialSpec("ring", 0.3, 1.5, 1 + 2j, 0.25)
    assert PotentialSpec.from_json(s.to_json()) == s


def test_translation_covariance():
    g = Grid(8.0, 64)
    a = sample_potential(PotentialSpec(center=0j), g).values
    b = sample_potential(PotentialSpec(center=complex(2 * g.h, -g.h)), g).values
    assert np.allclose(np.roll(a, (2, -1), axis=(0, 1)), b, atol=1e-12)


def test_w_of_zero_is_zero():
    g = Grid(6.0, 32)
    wf = solve_w(RealField(g, np.zeros((32, 32))))
    assert np.all(wf.w.values == 0) and wf.vhat0 == 0


def test_w_residual_and_tail():
    g = Grid(10.0, 64)
    v = sample_potential(PotentialSpec("gaussian", 1.0, 1.0), g)
    wf = solve_w(v)
    assert wf.residual <= 1e-6 * v.norm(2)
    near = check_w_asymptotics(wf, 4.0)
    far = check_w_asymptotics(wf, 8.0)
    assert near["deviation"] < 0.1
    assert far["deviation"] < near["deviation"]


def test_w_ring_radius_limit():
    g = Grid(6.0, 32)
    wf = solve_w(sample_potential(PotentialSpec(), g))
    with pytest.raises(ValueError):
        check_w_asymptotics(wf, 0.95 * g.R)
