import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import random_ds_set
from cosmotime.ds_domains import (
    DsBoundarySet,
    RoundBall,
    ball_of_point,
    brute_force_time_ds,
    contains_ds,
    cosmological_time_ds,
    ds_eps,
    is_past_of,
    level_sample_ds,
    lorentz_distance_ds,
    point_of_ball,
    realizing_geodesic_ds,
    reflect,
    reverse_cosmological_time_ds,
    support_defect_ds,
    two_mark_time,
)
from cosmotime.errors import DomainError, InvalidInputError, RangeError
from cosmotime.pseudo_linalg import inner_eps, orthonormal_complement


def antipodal(n):
    m = np.zeros((2, n))
    m[0, 0], m[1, 0] = 1.0, -1.0
    return DsBoundarySet(m)


def core_point(rng, n, a, b=0.0):
    """cosh(a) y + sinh(a) w with y on the core sphere and w in span(u1, u2)."""
    y = np.zeros(n + 1)
    g = rng.standard_normal(n - 1)
    y[2:] = g / np.linalg.norm(g)
    w = np.zeros(n + 1)
    w[0], w[1] = np.cosh(b), np.sinh(b)
    return np.cosh(a) * y + np.sinh(a) * w


def future_unit(rng, x, eps, spread=1.0):
    B = orthonormal_complement([x], eps, len(x) - 1)
    norms = inner_eps(B, B, eps)
    T = B[norms < 0][0]
    T = T if T[0] > 0 else -T
    S = B[norms > 0]
    xi = spread * rng.standard_normal(S.shape[0])
    r = np.linalg.norm(xi)
    return np.cosh(r) * T + np.sinh(r) * (xi / r) @ S


def test_ball_of_ds2_point():
    b = ball_of_point([0.0, 0.0, -1.0])
    np.testing.assert_allclose(b.center, [0, -1], atol=1e-15)
    assert b.radius == pytest.approx(np.pi / 2)


def test_ball_round_trip(rng):
    for _ in range(50):
        c = rng.standard_normal(4)
        c /= np.linalg.norm(c)
        ball = RoundBall(c, rng.uniform(0.05, 3.0))
        x = point_of_ball(ball)
        assert inner_eps(x, x, ds_eps(4)) == pytest.approx(1.0, abs=1e-9)
        back = ball_of_point(x)
        np.testing.assert_allclose(back.center, c, atol=1e-9)
        assert back.radius == pytest.approx(ball.radius, abs=1e-9)


def test_future_points_have_nested_balls(rng):
    eps = ds_eps(3)
    x = point_of_ball(RoundBall(np.array([0, 0, 1.0]), 1.2))
    v = future_unit(rng, x, eps)
    xs = np.cosh(0.4) * x + np.sinh(0.4) * v
    Q = rng.standard_normal((5000, 3))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    inner_ball = ball_of_point(xs).contains(Q)
    outer_ball = ball_of_point(x).contains(Q)
    assert np.all(outer_ball[inner_ball])


def test_antipodal_flip_gives_complementary_ball():
    x = point_of_ball(RoundBall(np.array([0.6, 0.8, 0.0]), 0.9))
    b, c = ball_of_point(x), ball_of_point(-x)
    np.testing.assert_allclose(c.center, -b.center)
    assert c.radius == pytest.approx(np.pi - b.radius)


def test_round_ball_validation():
    with pytest.raises(InvalidInputError):
        RoundBall(np.array([1.0, 1.0]), 1.0)
    with pytest.raises(InvalidInputError):
        RoundBall(np.array([1.0, 0.0]), 4.0)


def test_boundary_set_validation():
    with pytest.raises(InvalidInputError):
        DsBoundarySet(np.array([[1.0, 0.0, 0.0]]))
    with pytest.raises(InvalidInputError):
        DsBoundarySet(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    with pytest.raises(InvalidInputError):
        DsBoundarySet(np.array([[2.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))


def test_membership_two_marks(rng):
    bs = antipodal(3)
    y = core_point(rng, 3, 0.0)
    assert not contains_ds(bs, y)                  # on the horizon
    assert contains_ds(bs, core_point(rng, 3, 0.1))


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.floats(0.01, 3.0))
def test_domain_is_future_closed(seed, s):
    rng = np.random.default_rng(seed)
    bs = random_ds_set(rng)
    x = bs.sample_interior(1, rng)[0]
    v = future_unit(rng, x, bs.eps)
    y = np.cosh(s) * x + np.sinh(s) * v
    assert contains_ds(bs, y)
    assert is_past_of(x, y)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_lorentz_distance(rng, a):
    eps = ds_eps(3)
    x = point_of_ball(RoundBall(np.array([0, 1.0, 0]), 1.0))
    v = future_unit(rng, x, eps)
    assert lorentz_distance_ds(x, np.cosh(a) * x + np.sinh(a) * v) == pytest.approx(a, abs=1e-9)
    assert lorentz_distance_ds(x, x) == 0.0


def test_lorentz_distance_spacelike():
    x = np.array([0.0, 1.0, 0.0, 0.0])
    y = np.array([0.0, 0.0, 1.0, 0.0])
    assert lorentz_distance_ds(x, y) == 0.0


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize("a", [0.3, 1.0, 2.0])
def test_two_mark_time(rng, n, a):
    bs = antipodal(n)
    x = core_point(rng, n, a, b=rng.uniform(-1, 1))
    assert cosmological_time_ds(bs, x) == pytest.approx(a, abs=1e-8)
    assert cosmological_time_ds(bs, x, method="exact") == pytest.approx(a, abs=1e-9)
    assert two_mark_time(bs, x) == pytest.approx(a, abs=1e-9)


def test_time_vanishes_at_the_horizon(rng):
    bs = antipodal(3)
    taus = [cosmological_time_ds(bs, core_point(rng, 3, a), method="exact") for a in (1e-1, 1e-2, 1e-3)]
    assert taus[0] > taus[1] > taus[2] > 0
    assert taus[-1] == pytest.approx(1e-3, abs=1e-9)


def test_outside_points_rejected(rng):
    bs = antipodal(3)
    with pytest.raises(DomainError):
        cosmological_time_ds(bs, -core_point(rng, 3, 0.5))


@pytest.mark.parametrize("seed", range(4))
def test_unique_realizing_geodesic(seed):
    rng = np.random.default_rng(seed)
    bs = random_ds_set(rng)
    for x in bs.sample_interior(6, rng):
        geo = realizing_geodesic_ds(bs, x)
        assert np.max(np.linalg.norm(geo.start_feet - geo.foot, axis=1)) <= 1e-5
        assert support_defect_ds(bs, geo) <= 1e-6
        np.testing.assert_allclose(geo.point(geo.length), x, atol=1e-7)
        assert geo.length == pytest.approx(cosmological_time_ds(bs, x, method="exact"), abs=1e-8)


def test_reverse_time(rng):
    bs = random_ds_set(rng, 3)
    x = bs.sample_interior(1, rng)[0]
    assert reverse_cosmological_time_ds(bs, reflect(x)) == cosmological_time_ds(bs, x)


def test_level_sample_ds(rng):
    bs = random_ds_set(rng, 4)
    L = level_sample_ds(bs, 0.8, 10, seed=1)
    assert len(L) == 10
    for x in L.points:
        assert cosmological_time_ds(bs, x, method="exact") == pytest.approx(0.8, abs=1e-5)
    eps = bs.eps
    np.testing.assert_allclose(inner_eps(L.normals, L.normals, eps), -1, atol=1e-9)
    assert np.all(L.normals[:, 0] > 0)
    assert len(level_sample_ds(bs, 0.8, 0, seed=1)) == 0
    with pytest.raises(RangeError):
        level_sample_ds(bs, -1.0, 3, seed=1)


@pytest.mark.slow
def test_fan_oracle():
    rng = np.random.default_rng(5)
    worst, count = 0.0, 0
    while count < 50:
        bs = random_ds_set(rng)
        for x in bs.sample_interior(10, rng):
            worst = max(worst, abs(cosmological_time_ds(bs, x) - brute_force_time_ds(bs, x, seed=count)))
            count += 1
    assert worst <= 2e-3
