import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixmorrey.grid import SPECTRAL, Field, VectorField, make_grid
from mixmorrey.io import (MAGIC, FieldFormatError, decode, encode_header, read_field,
                          read_trajectory, sidecar_path, write_field, write_trajectory)
from mixmorrey.operators import free_trajectory, time_grid


@given(st.integers(1, 3), st.sampled_from([8, 10]), st.booleans())
def test_field_round_trip(tmp_path_factory, d, n, spectral):
    g = make_grid(d, n, 1.5)
    r = np.random.default_rng(d + n)
    f = Field(g, r.standard_normal(g.shape) + 1j * r.standard_normal(g.shape),
              SPECTRAL if spectral else "physical")
    path = tmp_path_factory.mktemp("f") / "a.anf"
    write_field(path, f)
    back = read_field(path)
    assert back.grid == g and back.tag == f.tag
    np.testing.assert_array_equal(back.data, f.data)


def test_axis_one_is_fastest(tmp_path):
    g = make_grid(2, 8, 1.0)
    a = np.arange(64, dtype=float).reshape(8, 8)
    write_field(tmp_path / "a.anf", Field(g, a))
    raw = (tmp_path / "a.anf").read_bytes()
    off = len(encode_header(g, "physical"))
    first = np.frombuffer(raw, dtype="<c16", offset=off)[:3].real
    # a[i1, i2]: consecutive records step along axis 1 (x1)
    np.testing.assert_array_equal(first, [a[0, 0], a[1, 0], a[2, 0]])


def test_vector_round_trip(tmp_path, rng):
    g = make_grid(2, 8, 1.0)
    u = VectorField(g, rng.standard_normal((2, 8, 8)))
    write_field(tmp_path / "u.anf", u)
    back = read_field(tmp_path / "u.anf")
    assert isinstance(back, VectorField)
    np.testing.assert_array_equal(back.data, u.data)
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "u.anf", vector=False)


def test_malformed_inputs(tmp_path):
    g = make_grid(1, 8, 1.0)
    good = encode_header(g, "physical") + np.zeros(8, dtype="<c16").tobytes()
    with pytest.raises(FieldFormatError, match="magic"):
        decode(b"XXXX" + good[4:])
    with pytest.raises(FieldFormatError):
        decode(good[:-3])
    with pytest.raises(FieldFormatError):
        decode(good[:10])
    with pytest.raises(FieldFormatError, match="tag"):
        decode(good[:20] + b"\x07" + good[21:])
    bad_d = MAGIC + struct.pack("<I", 5) + good[8:]
    with pytest.raises(FieldFormatError, match="dimension"):
        decode(bad_d)
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "missing.anf")


def test_trajectory_round_trip(tmp_path, rng):
    g = make_grid(2, 8, 2 * np.pi)
    u0 = VectorField(g, rng.standard_normal((2, 8, 8))).spectral()
    tr = free_trajectory(u0, 0.5, time_grid(1.0, 3))
    write_trajectory(tmp_path / "t.anf", tr, 0.5)
    back, nu = read_trajectory(tmp_path / "t.anf")
    assert nu == 0.5 and back.steps == 3
    np.testing.assert_array_equal(back.data, tr.data)
    np.testing.assert_allclose(back.times, tr.times)
    assert sidecar_path(tmp_path / "t.anf").endswith(".json")
