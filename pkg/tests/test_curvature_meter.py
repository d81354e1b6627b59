import numpy as np
import pytest

from cosmotime.ads_cosmo_time import level_sample
from cosmotime.ads_domains import AdsDomain, equatorial_data
from cosmotime.curvature_meter import (
    barrier_scan,
    convergence_ratio,
    distance_sphere_oracle,
    estimate_mean_curvature,
    leaf_oracle,
    level_bounds,
    smooth_level_curvature,
    verify_level_bounds,
)
from cosmotime.ds_domains import DsBoundarySet
from cosmotime.ds_foliations import UmbilicalLeaf, counterexample_peak
from cosmotime.errors import InvalidInputError, RangeError


@pytest.fixture(scope="module")
def fuchsian():
    return AdsDomain(equatorial_data(3, 4))


@pytest.fixture(scope="module")
def fuchsian16():
    return AdsDomain(equatorial_data(3, 16))


def vertex_mask(dom, a, samples, seed):
    """Samples whose realizing foot is the common vertex (0, -1, 0) of all null planes."""
    v = np.zeros(dom.n + 1)
    v[1] = -1.0
    L = level_sample(dom, a, samples, seed)
    return np.linalg.norm(L.feet - v, axis=1) < 1e-6


def antipodal(n):
    e = np.zeros(n)
    e[0] = 1.0
    return DsBoundarySet(np.array([e, -e]))


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
def test_leaf_curvature(t, rng):
    v = np.array([1.0, 0.0, 0.0, 0.0])
    leaf = UmbilicalLeaf(v, t)
    X, N = leaf.sample(3, rng)
    for x, nu in zip(X, N):
        H, res = estimate_mean_curvature(leaf_oracle(leaf), x, nu)
        assert H == pytest.approx(-np.tanh(t), abs=1e-3)
        assert res < 1e-9


@pytest.mark.parametrize("a", [0.4, 1.0, 2.5])
def test_distance_sphere_curvature(a):
    c = np.array([0.0, 1.0, 0.0, 0.0])
    T = np.array([1.0, 0.0, 0.0, 0.0])
    w = np.cosh(0.3) * T + np.sinh(0.3) * np.array([0.0, 0.0, 1.0, 0.0])
    x = np.cosh(a) * c + np.sinh(a) * w
    nu = np.sinh(a) * c + np.cosh(a) * w
    H, _ = estimate_mean_curvature(distance_sphere_oracle(c, a), x, nu)
    assert H == pytest.approx(-1.0 / np.tanh(a), abs=1e-3)


def test_step_size_range(rng):
    leaf = UmbilicalLeaf(np.array([1.0, 0, 0, 0]), 0.5)
    X, N = leaf.sample(1, rng)
    with pytest.raises(RangeError):
        estimate_mean_curvature(leaf_oracle(leaf), X[0], N[0], h=0.1)


@pytest.mark.parametrize("a", [0.4, 0.9, 2.0])
def test_convergence_ratio(a):
    c = np.array([0.0, 1.0, 0.0, 0.0])
    T = np.array([1.0, 0.0, 0.0, 0.0])
    x = np.cosh(a) * c + np.sinh(a) * T
    nu = np.sinh(a) * c + np.cosh(a) * T
    e1, e2, ratio = convergence_ratio(distance_sphere_oracle(c, a), x, nu, -1 / np.tanh(a))
    assert e2 < e1 < 1e-4
    assert 3.5 <= ratio <= 4.5


def test_bounds_formulas():
    lo, hi = level_bounds("ads", 3, 0.5)
    assert lo == pytest.approx(-1 / np.tan(0.5))
    assert hi == pytest.approx(-0.5 / np.tan(0.5) + 0.5 * np.tan(0.5))
    assert level_bounds("ads_reverse", 3, 0.5) == pytest.approx((-hi, -lo))
    lo, hi = level_bounds("ds", 4, 1.0)
    assert lo == pytest.approx(-1 / np.tanh(1.0))
    assert hi == pytest.approx(-(1 / np.tanh(1.0)) / 3 - 2 * np.tanh(1.0) / 3)
    # strata interpolate between the two bounds
    for k in range(1, 5):
        v = smooth_level_curvature("ds", 4, 1.0, k)
        assert lo - 1e-12 <= v <= hi + 1e-12 or k == 1
    assert smooth_level_curvature("ds", 4, 1.0, 2) == pytest.approx(-0.945407, abs=1e-6)


@pytest.mark.parametrize("a", [0.3, 0.7, 1.2])
def test_fuchsian_level(fuchsian16, a):
    rep = verify_level_bounds(fuchsian16, "ads", a, 10, seed=1)
    assert rep.passed and rep.accepted_fraction == 1.0
    at_vertex = vertex_mask(fuchsian16, a, 10, seed=1)
    assert at_vertex.sum() >= 5
    np.testing.assert_allclose(rep.H[at_vertex], -1 / np.tan(a), atol=1e-3)
    # edge strata sit strictly above the umbilical value
    assert np.all(rep.H[~at_vertex] > -1 / np.tan(a) + 1e-3)


def test_fuchsian_reverse_level(fuchsian16):
    rep = verify_level_bounds(fuchsian16, "ads_reverse", 0.7, 10, seed=2)
    assert rep.passed
    at_vertex = vertex_mask(fuchsian16.reflected(), 0.7, 10, seed=2)
    assert at_vertex.sum() >= 5
    np.testing.assert_allclose(rep.H[at_vertex], 1 / np.tan(0.7), atol=1e-3)


def test_two_mark_level():
    rep = verify_level_bounds(antipodal(4), "ds", 1.0, 6, seed=3)
    assert rep.passed
    np.testing.assert_allclose(rep.H[rep.accepted], -0.945407, atol=1e-3)


def test_model_and_level_validation(fuchsian):
    with pytest.raises(InvalidInputError):
        verify_level_bounds(fuchsian, "flat", 0.5, 2, seed=0)
    with pytest.raises(RangeError):
        verify_level_bounds(fuchsian, "ads", 2.0, 2, seed=0)
    with pytest.raises(RangeError):
        verify_level_bounds(antipodal(3), "ds", -1.0, 2, seed=0)


def test_barrier_verdicts(fuchsian):
    rep = barrier_scan(fuchsian, "ads", [0.4, 0.2, 0.1, 0.05], [0.4, 0.2, 0.1, 0.05], samples=3)
    assert rep.verdict == "global" and rep.label == "global(-inf,+inf)"
    rep3 = barrier_scan(antipodal(3), "ds", [0.4, 0.2, 0.1, 0.05], [2, 4, 6, 8], samples=3)
    assert rep3.verdict == "global" and rep3.alpha == -np.inf
    assert rep3.beta == pytest.approx(-1.0, abs=5e-3)
    rep4 = barrier_scan(antipodal(4), "ds", [0.4, 0.2, 0.1, 0.05], [0.5, 0.88, 2, 4], samples=3)
    assert rep4.verdict == "partial" and rep4.label == "partial(-inf)"
    assert rep4.non_monotone and rep4.nonexistence
    d = rep4.as_dict()
    assert d["cmc_time_verdict"] == "partial" and d["alpha"] == "-inf"
    assert max(p[2] for p in rep4.future_grid) <= counterexample_peak(4)[1] + 1e-3
