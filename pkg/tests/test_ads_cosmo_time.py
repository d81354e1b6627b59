import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import random_ads_domain
from cosmotime.ads_cosmo_time import (
    brute_force_time,
    cosmological_time,
    cosmological_time_exact,
    level_sample,
    realizing_geodesic,
    reverse_cosmological_time,
    support_defect,
)
from cosmotime.ads_domains import AdsDomain, equatorial_data
from cosmotime.ads_model import ads_eps, reflect, time_rotation
from cosmotime.errors import DomainError, RangeError
from cosmotime.pseudo_linalg import inner_eps


@pytest.fixture(scope="module")
def fuchsian():
    return AdsDomain(equatorial_data(3, 4))


@pytest.fixture(scope="module")
def fuchsian4():
    return AdsDomain(equatorial_data(4, 6))


def fuchsian_point(a, n):
    x = np.zeros(n + 1)
    x[0], x[1] = np.sin(a), -np.cos(a)
    return x


@pytest.mark.parametrize("a", [0.3, 0.7, 1.2])
@pytest.mark.parametrize("method", ["search", "exact"])
def test_fuchsian_closed_form(fuchsian, fuchsian4, a, method):
    for dom in (fuchsian, fuchsian4):
        x = fuchsian_point(a, dom.n)
        assert cosmological_time(dom, x, method=method) == pytest.approx(a, abs=1e-9)


@pytest.mark.parametrize("a", [0.3, 0.7, 1.2])
def test_fuchsian_foot(fuchsian, a):
    geo = realizing_geodesic(fuchsian, fuchsian_point(a, 3))
    np.testing.assert_allclose(geo.foot_linear, [0, -1, 0, 0], atol=1e-7)
    assert geo.length == pytest.approx(a, abs=1e-9)
    np.testing.assert_allclose(geo.point(a), fuchsian_point(a, 3), atol=1e-7)


def test_time_decreases_to_zero_toward_the_horizon(rng):
    dom = random_ads_domain(rng, 3)
    X = dom.sample_interior(50, rng)
    X = X[dom.contains_regular_batch(X)]
    x = X[cosmological_time_exact(dom, X).tau < np.pi / 2][0]
    geo = realizing_geodesic(dom, x)
    s = np.linspace(geo.length, 1e-3, 12)
    taus = [cosmological_time(dom, geo.point(v), method="exact") for v in s]
    assert np.all(np.diff(taus) < 0)
    np.testing.assert_allclose(taus, s, atol=1e-7)


def test_time_increases_along_future_curve(rng):
    dom = random_ads_domain(rng, 4)
    X = dom.sample_interior(50, rng)
    x = X[dom.contains_regular_batch(X)][0]
    v = time_rotation(x)
    v /= np.sqrt(-inner_eps(v, v, dom.eps))
    pts = [np.cos(s) * x + np.sin(s) * v for s in np.linspace(0, 0.3, 10)]
    pts = [p for p in pts if dom.contains_regular_batch(p[None, :])[0]]
    assert len(pts) >= 3
    taus = [cosmological_time(dom, p) for p in pts]
    assert np.all(np.diff(taus) > 0)


@pytest.mark.parametrize("seed", range(4))
def test_search_matches_exact(seed):
    rng = np.random.default_rng(seed)
    dom = random_ads_domain(rng)
    X = dom.sample_interior(40, rng)
    X = X[dom.contains_regular_batch(X)][:8]
    exact = cosmological_time_exact(dom, X).tau
    search = [cosmological_time(dom, x) for x in X]
    np.testing.assert_allclose(search, exact, atol=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_realizing_geodesic_unique_and_tight(seed):
    rng = np.random.default_rng(100 + seed)
    dom = random_ads_domain(rng)
    X = dom.sample_interior(40, rng)
    X = X[dom.contains_regular_batch(X)]
    taus = cosmological_time_exact(dom, X).tau
    X = X[taus < np.pi / 2][:6]
    for x in X:
        geo = realizing_geodesic(dom, x)
        assert np.max(np.linalg.norm(geo.start_feet - geo.foot_linear, axis=1)) <= 1e-5
        assert support_defect(dom, geo) <= 1e-6
        # the geodesic leaves a horizon point and reaches x
        np.testing.assert_allclose(geo.point(geo.length), x, atol=1e-7)


def test_outside_points_rejected(fuchsian):
    with pytest.raises(DomainError):
        cosmological_time(fuchsian, fuchsian_point(-0.3, 3))   # beyond the past horizon
    with pytest.raises(DomainError):
        cosmological_time(fuchsian, [1.0, 0.0, 0.0])


def test_reverse_time_is_time_of_reflection(rng):
    dom = random_ads_domain(rng, 3)
    X = dom.sample_interior(60, rng)
    X = X[dom.contains_regular_batch(X)][:5]
    rdom = dom.reflected()
    for x in X:
        # reflecting twice returns the original domain and point
        assert reverse_cosmological_time(rdom, reflect(x), method="exact") == \
            cosmological_time(dom, x, method="exact")


def test_level_sample_fuchsian(fuchsian):
    for a in (0.3, 0.7, 1.2):
        L = level_sample(fuchsian, a, 12, seed=3)
        assert len(L) == 12
        tau = cosmological_time_exact(fuchsian, L.points).tau
        np.testing.assert_allclose(tau, a, atol=1e-5)
        eps = ads_eps(3)
        np.testing.assert_allclose(inner_eps(L.points, L.points, eps), -1, atol=1e-9)
        np.testing.assert_allclose(inner_eps(L.normals, L.normals, eps), -1, atol=1e-9)
        np.testing.assert_allclose(inner_eps(L.points, L.normals, eps), 0, atol=1e-9)
        core = np.array([len(s) == 3 for s in L.active])
        # over the core the level is the umbilical slice x2 = -cos a
        np.testing.assert_allclose(L.points[core, 1], -np.cos(a), atol=1e-9)


def test_level_sample_edge_cases(fuchsian):
    assert len(level_sample(fuchsian, 0.5, 0, seed=0)) == 0
    with pytest.raises(RangeError):
        level_sample(fuchsian, np.pi / 2, 5, seed=0)
    with pytest.raises(RangeError):
        level_sample(fuchsian, 0.0, 5, seed=0)


def test_level_sample_deterministic_across_threads(rng):
    dom = random_ads_domain(rng, 3)
    a = level_sample(dom, 0.6, 8, seed=5, threads=1)
    b = level_sample(dom, 0.6, 8, seed=5, threads=4)
    np.testing.assert_array_equal(a.points, b.points)


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_time_is_bounded_by_half_pi_in_tight_region(seed):
    rng = np.random.default_rng(seed)
    dom = random_ads_domain(rng)
    X = dom.sample_interior(30, rng)
    X = X[dom.contains_regular_batch(X)]
    tau = cosmological_time_exact(dom, X).tau
    assert np.all(np.isfinite(tau)) and np.all((tau > 0) & (tau < np.pi))


@pytest.mark.slow
def test_fan_oracle_matches_horizon_maximization():
    rng = np.random.default_rng(77)
    worst = 0.0
    count = 0
    while count < 50:
        dom = random_ads_domain(rng)
        X = dom.sample_interior(30, rng)
        X = X[dom.contains_regular_batch(X)][:10]
        for x in X:
            tau = cosmological_time(dom, x)
            worst = max(worst, abs(tau - brute_force_time(dom, x, fan=10_000, seed=count)))
            count += 1
    assert worst <= 2e-3
