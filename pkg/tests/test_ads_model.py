import numpy as np
import pytest
from hypothesis import given, strategies as st

from cosmotime.ads_model import (
    AdsConformalPoint,
    ads_eps,
    boundary_to_null,
    causal_sign_boundary,
    conformal_to_linear,
    geodesic_point,
    is_future,
    is_on_quadric,
    linear_to_conformal,
    lorentz_distance_ads,
    reflect,
    time_rotation,
)
from cosmotime.errors import DomainError, InvalidInputError
from cosmotime.pseudo_linalg import inner_eps


def random_conformal(rng, n):
    p = rng.standard_normal(n)
    p[-1] = abs(p[-1]) + 0.05
    return AdsConformalPoint(rng.uniform(-3, 3), p / np.linalg.norm(p))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_round_trip(rng, n):
    for _ in range(100):
        c = random_conformal(rng, n)
        x = conformal_to_linear(c)
        back = linear_to_conformal(x, t_ref=c.t)
        assert back.t == pytest.approx(c.t, abs=1e-9)
        np.testing.assert_allclose(back.p, c.p, atol=1e-9)
        assert inner_eps(x, x, ads_eps(n)) == pytest.approx(-1.0, abs=1e-9)


def test_north_pole_fixed_by_reflection():
    x = conformal_to_linear(AdsConformalPoint(0.0, [0, 0, 1.0]))
    assert x[1] == 0.0
    np.testing.assert_array_equal(reflect(x), x)


def test_boundary_points_rejected():
    with pytest.raises(DomainError):
        conformal_to_linear(AdsConformalPoint(0.0, [1.0, 0.0, 0.0]))


def test_conformal_validation():
    with pytest.raises(InvalidInputError):
        AdsConformalPoint(0.0, [0.5, 0.5, 0.5])
    with pytest.raises(InvalidInputError):
        AdsConformalPoint(0.0, [0.0, 0.6, -0.8])


def test_boundary_to_null_examples():
    q = np.array([0.6, 0.8])
    u = boundary_to_null(0.0, q)
    np.testing.assert_allclose(u, [1, 0, 0.6, 0.8])
    assert inner_eps(u, u, ads_eps(3)) == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(boundary_to_null(np.pi / 2, q), [0, 1, 0.6, 0.8], atol=1e-15)
    np.testing.assert_allclose(boundary_to_null(np.pi, -q), -u, atol=1e-15)


@pytest.mark.parametrize("a", [0.1, 1.0, 2.5, 3.0])
def test_distance_along_time_circle(a):
    x = np.array([1.0, 0, 0, 0])
    y = np.array([np.cos(a), np.sin(a), 0, 0])
    assert lorentz_distance_ads(x, y) == pytest.approx(a, abs=1e-12)


def test_distance_degenerate_cases():
    x = np.array([1.0, 0, 0, 0])
    assert lorentz_distance_ads(x, x) == 0.0
    # <x, y> = -1.5 lies beyond -1: spacelike separation
    s = np.sqrt(1.5 ** 2 - 1)
    y = np.array([1.5, 0, s, 0])
    assert inner_eps(x, y, ads_eps(3)) == pytest.approx(-1.5)
    assert is_on_quadric(y)
    assert lorentz_distance_ads(x, y) == 0.0


def test_causal_sign_boundary_examples():
    q = np.array([1.0, 0.0])
    qp = np.array([0.0, 1.0])
    x = boundary_to_null(0.0, q)
    assert causal_sign_boundary(x, x) == "causal"
    assert causal_sign_boundary(x, np.concatenate(([0.0, 1.0], qp))) == "causal"
    y = np.concatenate(([-1.0, 0.0], q))
    assert inner_eps(x, y, ads_eps(3)) == pytest.approx(2.0)
    assert causal_sign_boundary(x, y) == "timelike"
    assert causal_sign_boundary(x, np.concatenate(([1.0, 0.0], -q))) == "none"


def test_time_orientation():
    z = np.array([0.0, -1.0, 0.0, 0.0])
    # the Killing field itself is future-directed
    assert is_future(time_rotation(z), z)
    assert not is_future(-time_rotation(z), z)


@given(st.floats(-3, 3), st.floats(0.01, 3.1))
def test_geodesic_stays_on_quadric(t0, s):
    x = np.array([np.cos(t0), np.sin(t0), 0.0, 0.0])
    v = time_rotation(x)
    y = geodesic_point(x, v, s)
    assert is_on_quadric(y)
    assert lorentz_distance_ads(x, y) == pytest.approx(s, abs=1e-7)


@given(st.integers(0, 10_000))
def test_reflection_is_an_isometry(seed):
    rng = np.random.default_rng(seed)
    x = conformal_to_linear(random_conformal(rng, 4))
    y = conformal_to_linear(random_conformal(rng, 4))
    eps = ads_eps(4)
    assert inner_eps(reflect(x), reflect(y), eps) == pytest.approx(inner_eps(x, y, eps), rel=1e-12, abs=1e-12)
    assert linear_to_conformal(reflect(x)).t == pytest.approx(-linear_to_conformal(x).t, abs=1e-12)
