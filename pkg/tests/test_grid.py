import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixmorrey.grid import (PHYSICAL, SPECTRAL, Field, RepresentationError, VectorField,
                            dealias, forward_transform, hermitian_symmetrize, inverse_transform,
                            make_grid, multiply_spectrum, to_real)


def brute_dft(a, L):
    """Direct O(N^2) sum: c_k = N^-d sum_x a(x) exp(-i k.x 2 pi / L)."""
    n = a.shape[0]
    d = a.ndim
    g = make_grid(d, n, L)
    xs = g.coords()
    k1 = np.fft.fftfreq(n, 1.0 / n)
    out = np.zeros(a.shape, dtype=complex)
    for kidx in np.ndindex(a.shape):
        phase = sum(k1[kidx[i]] * xs[i] for i in range(d)) * g.kappa
        out[kidx] = np.sum(a * np.exp(-1j * phase)) / a.size
    return out


@pytest.mark.parametrize("d", [1, 2])
def test_forward_matches_brute_force_dft(d, rng):
    a = rng.standard_normal((8,) * d)
    g = make_grid(d, 8, 3.0)
    f = forward_transform(Field(g, a))
    assert f.tag == SPECTRAL
    np.testing.assert_allclose(f.data, brute_dft(a, 3.0), atol=1e-13)


def test_single_mode_coefficient():
    g = make_grid(2, 8, 2 * np.pi)
    x, y = g.coords()
    f = Field(g, np.cos(2 * x + y)).spectral()
    c = f.data
    assert abs(c[2, 1] - 0.5) < 1e-14 and abs(c[-2, -1] - 0.5) < 1e-14
    c2 = c.copy()
    c2[2, 1] = c2[-2, -1] = 0
    assert np.abs(c2).max() < 1e-14


@given(st.integers(1, 3), st.sampled_from([8, 10, 16]), st.floats(0.5, 10))
def test_round_trip(d, n, L):
    r = np.random.default_rng(d * 100 + n)
    a = r.standard_normal((n,) * d)
    g = make_grid(d, n, L)
    back = inverse_transform(forward_transform(Field(g, a)))
    assert back.tag == PHYSICAL
    np.testing.assert_allclose(back.data, a, atol=1e-12)


def test_grid_validation():
    with pytest.raises(ValueError):
        make_grid(4, 8, 1.0)
    with pytest.raises(ValueError):
        make_grid(2, 7, 1.0)
    with pytest.raises(ValueError):
        make_grid(2, 6, 1.0)
    with pytest.raises(ValueError):
        make_grid(2, 8, -1.0)


def test_wavenumbers_and_dealias_mask():
    g = make_grid(1, 12, 2 * np.pi)
    assert list(g.k_int[0][:7]) == [0, 1, 2, 3, 4, 5, -6]
    # 3|k| < n keeps |k| <= 3 at n = 12
    kept = sorted(int(k) for k in g.k_int[0][g.dealias_mask])
    assert kept == [-3, -2, -1, 0, 1, 2, 3]


def test_hermitian_symmetrize_gives_real_field(rng):
    g = make_grid(2, 8, 1.0)
    c = hermitian_symmetrize(rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape), g)
    a = Field(g, c, SPECTRAL).physical().data
    assert np.abs(a.imag).max() < 1e-13 * np.abs(a.real).max()


def test_to_real_rejects_complex():
    with pytest.raises(ValueError):
        to_real(np.array([1.0 + 1e-3j, 2.0]))
    assert to_real(np.array([1.0 + 1e-15j])).dtype == float


def test_field_arithmetic_and_tags(rng):
    g = make_grid(2, 8, 1.0)
    f = Field(g, rng.standard_normal(g.shape))
    s = f.spectral()
    # mixed tags are converted to the left operand's representation
    np.testing.assert_allclose((f + s).data, 2 * f.data, atol=1e-13)
    assert (s + f).tag == SPECTRAL
    with pytest.raises(RepresentationError):
        forward_transform(s)
    with pytest.raises(RepresentationError):
        inverse_transform(f)
    with pytest.raises(ValueError):
        f.data[0, 0] = 1.0
    with pytest.raises(ValueError):
        f + Field(make_grid(2, 8, 2.0), f.data)


def test_vector_field_components(rng):
    g = make_grid(2, 8, 1.0)
    u = VectorField(g, rng.standard_normal((2,) + g.shape))
    assert u.spectral().physical().data.shape == (2, 8, 8)
    with pytest.raises(ValueError):
        VectorField(g, rng.standard_normal((3,) + g.shape))


def test_multiply_spectrum_and_dealias_keep_tag(rng):
    g = make_grid(1, 12, 2 * np.pi)
    f = Field(g, rng.standard_normal(g.shape))
    assert multiply_spectrum(f, 2.0).tag == PHYSICAL
    np.testing.assert_allclose(multiply_spectrum(f, 2.0).data, 2 * f.data, atol=1e-14)
    c = dealias(f).spectral().data
    assert np.abs(c[~g.dealias_mask]).max() < 1e-15
    np.testing.assert_allclose(c[g.dealias_mask], f.spectral().data[g.dealias_mask], atol=1e-15)
