import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixmorrey.morrey import auto_stride, dyadic_radii, mixed_lebesgue, mixed_morrey


def brute_morrey(a, q, lam, h, d, periodic=True, full=False):
    """Every center, every dyadic radius, an explicit ball mask."""
    n = a.shape[0]
    if not periodic:
        a = np.pad(a, [(0, n)] * d)
    P = a.shape[0]
    idx = np.indices((P,) * d)
    w = sum(l / qq for l, qq in zip(lam, q))
    best = 0.0
    for c in itertools.product(range(n), repeat=d):
        dist2 = 0
        for i in range(d):
            dd = np.abs(idx[i] - c[i])
            dist2 = dist2 + (np.minimum(dd, P - dd) * h) ** 2
        for R in dyadic_radii(h, n * h, d, full):
            ball = dist2 <= R * R * (1 + 1e-12)
            best = max(best, R ** (-w) * mixed_lebesgue(a * ball, q, h, d))
    return best


def brute_lebesgue(a, p, h):
    """Iterated norm written out for d = 2: x1 (axis 0) innermost."""
    inner = (h * np.sum(np.abs(a) ** p[0], axis=0)) ** (1 / p[0])
    return (h * np.sum(inner ** p[1])) ** (1 / p[1])


@pytest.mark.parametrize("d,q,lam", [(1, (2.0,), (0.3,)), (2, (2.0, 3.0), (0.2, 0.5)),
                                     (3, (1.5, 2.0, 3.0), (0.1, 0.2, 0.3))])
@pytest.mark.parametrize("periodic", [True, False])
def test_matches_brute_force(d, q, lam, periodic, rng):
    a = rng.standard_normal((8,) * d)
    got = mixed_morrey(a, q, lam, 0.7, d, periodic=periodic, stride=1).value
    want = brute_morrey(a, q, lam, 0.7, d, periodic)
    assert abs(got - want) <= 1e-12 * want


def test_full_diameter_matches_brute_force(rng):
    a = rng.standard_normal((8, 8))
    got = mixed_morrey(a, (2.0, 1.5), (0.0, 0.4), 0.5, 2, stride=1, full_diameter=True).value
    assert abs(got - brute_morrey(a, (2.0, 1.5), (0.0, 0.4), 0.5, 2, full=True)) < 1e-12 * got


def test_mixed_lebesgue_axis_order(rng):
    a = rng.standard_normal((8, 8))
    p = (1.5, 4.0)
    assert abs(mixed_lebesgue(a, p, 0.3, 2) - brute_lebesgue(a, p, 0.3)) < 1e-12
    # swapping the exponents changes the value: x1 is innermost
    assert abs(mixed_lebesgue(a, p[::-1], 0.3, 2) - brute_lebesgue(a, p, 0.3)) > 1e-6


def test_lambda_zero_full_diameter_is_lebesgue(rng):
    a = rng.standard_normal((16, 16))
    m = mixed_morrey(a, (2.0, 3.0), (0.0, 0.0), 0.2, 2, stride=1, full_diameter=True).value
    assert abs(m - mixed_lebesgue(a, (2.0, 3.0), 0.2, 2)) < 1e-12 * m


def test_batched_equals_loop(rng):
    a = rng.standard_normal((3, 2, 16, 16))
    res = mixed_morrey(a, (2.0, 2.0), (0.3, 0.3), 0.1, 2, stride=2)
    assert res.value.shape == (3, 2) and res.center.shape == (3, 2, 2)
    for i, j in np.ndindex(3, 2):
        one = mixed_morrey(a[i, j], (2.0, 2.0), (0.3, 0.3), 0.1, 2, stride=2)
        assert abs(one.value - res.value[i, j]) < 1e-13 * one.value
        assert one.radius == res.radius[i, j]


def test_argmax_ball_attains_value(rng):
    a = np.zeros((16, 16))
    a[5, 9] = 3.0
    res = mixed_morrey(a, (2.0, 2.0), (0.5, 0.5), 0.25, 2, stride=1)
    assert res.radius == 0.25  # a point mass favours the smallest ball
    assert res.value == pytest.approx(0.25 ** -0.5 * 3.0 * 0.25)


@given(st.floats(0.1, 10), st.floats(1, 5), st.floats(0, 0.9))
def test_homogeneity(c, q, lam):
    a = np.random.default_rng(1).standard_normal((8, 8))
    base = mixed_morrey(a, q, lam, 0.5, 2, stride=1).value
    assert mixed_morrey(c * a, q, lam, 0.5, 2, stride=1).value == pytest.approx(c * base, rel=1e-12)


@given(st.integers(0, 7), st.integers(0, 7))
def test_translation_invariance(s1, s2):
    a = np.random.default_rng(2).standard_normal((8, 8))
    base = mixed_morrey(a, (2.0, 3.0), (0.2, 0.4), 0.5, 2, stride=1).value
    shifted = mixed_morrey(np.roll(a, (s1, s2), axis=(0, 1)), (2.0, 3.0), (0.2, 0.4), 0.5, 2, stride=1).value
    assert shifted == pytest.approx(base, rel=1e-12)


@given(st.floats(0, 0.9), st.floats(0, 0.9))
def test_triangle_inequality(l1, l2):
    r = np.random.default_rng(3)
    a, b = r.standard_normal((2, 8, 8))
    m = lambda x: mixed_morrey(x, (2.0, 1.5), (l1, l2), 0.5, 2, stride=1).value  # noqa: E731
    assert m(a + b) <= m(a) + m(b) + 1e-12


def test_stride_gives_lower_bound(rng):
    a = rng.standard_normal((32, 32))
    full = mixed_morrey(a, (2.0, 2.0), (0.3, 0.3), 0.1, 2, stride=1).value
    assert mixed_morrey(a, (2.0, 2.0), (0.3, 0.3), 0.1, 2, stride=4).value <= full + 1e-15


def test_radii_and_stride_helpers():
    assert dyadic_radii(1.0, 8.0, 2) == (1.0, 2.0, 4.0)
    assert dyadic_radii(1.0, 8.0, 2, full=True)[-1] == pytest.approx(4 * np.sqrt(2))
    assert auto_stride(64, 2) == 1 and auto_stride(512, 2) == 8


def test_rejects_bad_exponents():
    a = np.ones((8, 8))
    with pytest.raises(ValueError):
        mixed_morrey(a, (0.5, 2.0), (0.1, 0.1), 1.0, 2)
    with pytest.raises(ValueError):
        mixed_morrey(a, (2.0, 2.0), (1.0, 0.1), 1.0, 2)
    with pytest.raises(ValueError):
        mixed_lebesgue(a, (0.5, 1.0), 1.0, 2)
