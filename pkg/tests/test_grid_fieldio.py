import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvscatter.fieldio import FieldFormatError, decode_field, encode_field, read_field, read_provenance, write_field
from nvscatter.grid import ComplexField, Grid, RealField, integrate, spectral_derivative


def test_grid_rejects_bad_sizes():
    for R, N in [(0.0, 32), (-1.0, 32), (5.0, 15), (5.0, 8), (np.inf, 32)]:
        with pytest.raises(ValueError):
            Grid(R, N)


def test_grid_spacing_and_axis():
    g = Grid(4.0, 16)
    assert g.h == 0.5
    assert g.axis[0] == -4.0 and g.axis[g.N // 2] == 0.0
    assert g.doubled().h == g.h


def test_integrate_gaussian():
    g = Grid(8.0, 64)
    f = RealField(g, np.exp(-np.abs(g.z) ** 2))
    assert abs(integrate(f) - np.pi) < 1e-12


def test_dz_of_conj_z_gaussian():
    # d_z exp(-|z|^2) = -conj(z) exp(-|z|^2)
    g = Grid(8.0, 64)
    f = np.exp(-np.abs(g.z) ** 2)
    d = spectral_derivative(ComplexField(g, f), "dz")
    d = d.values if hasattr(d, "values") else d
    assert np.max(np.abs(d + np.conj(g.z) * f)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(8, 24).map(lambda n: 2 * n), st.floats(0.5, 50.0), st.booleans())
def test_encode_decode_roundtrip(N, R, cplx):
    g = Grid(R, N)
    rng = np.random.default_rng(N)
    vals = rng.standard_normal((N, N))
    f = ComplexField(g, vals + 1j * rng.standard_normal((N, N))) if cplx else RealField(g, vals)
    back = decode_field(encode_field(f))
    assert back.grid == g
    assert np.array_equal(back.values, f.values)
    assert isinstance(back, RealField) != cplx


def test_corrupt_header(tmp_path):
    g = Grid(4.0, 16)
    blob = bytearray(encode_field(RealField(g, np.zeros((16, 16)))))
    blob[:4] = b"XXXX"
    with pytest.raises(FieldFormatError):
        decode_field(bytes(blob))
    with pytest.raises(FieldFormatError):
        decode_field(bytes(blob[:10]))


def test_provenance_sidecar(tmp_path):
    g = Grid(4.0, 16)
    p = write_field(tmp_path / "f.nvsf", RealField(g, np.ones((16, 16))), {"config_hash": "abc"})
    assert read_provenance(p)["config_hash"] == "abc"
    assert np.all(read_field(p).values == 1.0)
