"""Cosmological time, reverse time, realizing geodesics and level sets in AdS.

Two solvers are provided. ``method="search"`` follows the variational
definition: the Lorentzian distance from x to the past horizon point over p,
``p -> d(x, (f-(p), p))``, is scanned on a hemisphere grid and refined by
Nelder-Mead from 8 starts, then each local optimum is polished by solving the
Lagrange system of its active null generators. ``method="exact"`` enumerates
the active sets directly and is the fast path used for level sets.

Both require x in the regular part of the domain (see
:meth:`AdsDomain.regular_margin`).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._solver import grid_size, nelder_mead, pick_starts, sphere_points
from .ads_domains import AdsDomain
from .ads_model import AdsConformalPoint, conformal_batch, linear_to_conformal, reflect, time_rotation
from .errors import DomainError, RangeError, UniquenessViolationError
from .pseudo_linalg import as_coords, inner_eps, orthonormal_complement

N_STARTS = 8
N_RESTARTS = 4
TOL_UNIQUE = 1e-5
TOL_TIE = 1e-7
TOL_ACTIVE = 1e-5
TOL_LEVEL = 1e-5


@dataclass
class RealizingGeodesic:
    foot: AdsConformalPoint
    foot_linear: np.ndarray
    direction: np.ndarray       # future unit tangent at the foot
    length: float
    active: tuple = ()
    start_feet: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def point(self, s: float) -> np.ndarray:
        return np.cos(s) * self.foot_linear + np.sin(s) * self.direction

    def tangent(self, s: float) -> np.ndarray:
        return -np.sin(s) * self.foot_linear + np.cos(s) * self.direction


def _check_point(dom: AdsDomain, x) -> np.ndarray:
    x = np.asarray(as_coords(x), dtype=float)
    if x.shape != (dom.n + 1,):
        raise DomainError(f"expected a point of R^{dom.n + 1}")
    if not dom.contains_regular_batch(x[None, :])[0]:
        raise DomainError("point is outside the regular domain")
    return x


def _grid(dom: AdsDomain) -> np.ndarray:
    cache = getattr(dom, "_search_grid", None)
    if cache is None:
        P = sphere_points(dom.n, 2 * grid_size(dom.n), seed=11)
        P[:, -1] = np.abs(P[:, -1])
        cache = P[P[:, -1] > 1e-3]
        dom._search_grid = cache
    return cache


def _gnomonic(y: np.ndarray) -> np.ndarray:
    p = np.append(y, 1.0)
    return p / np.linalg.norm(p)


def _polish(dom: AdsDomain, x: np.ndarray, p: np.ndarray, value: float):
    """Exact Lagrange solution over generators active at the horizon point above p."""
    d = np.arccos(np.clip(dom._marks @ p, -1.0, 1.0))
    gaps = dom.data.theta - d
    near = np.flatnonzero(gaps >= gaps.max() - TOL_ACTIVE)
    for widen in (near, np.flatnonzero(gaps >= gaps.max() - 1e-3)):
        res = dom.solver.solve_restricted(x, widen)
        if np.isfinite(res.tau[0]) and res.tau[0] >= value - 1e-7:
            return float(res.tau[0]), res.foot[0], res.direction[0], res.active[0]
    return None


def _search(dom: AdsDomain, x: np.ndarray):
    tx = float(dom.unrolled_time(x[None, :])[0])
    _, px = conformal_batch(x[None, :])
    px = np.ascontiguousarray(px[0])
    marks = dom._marks
    theta = np.ascontiguousarray(dom.data.theta)
    P = _grid(dom)
    vals = kernels.ads_horizon_objective(x, tx, px, P, marks, theta)
    starts = pick_starts(P / P[:, -1:], vals, N_STARTS)

    def obj(y):
        return float(kernels.ads_horizon_objective(x, tx, px, _gnomonic(y)[None, :], marks, theta)[0])

    results = []
    for i in starts:
        y = P[i, :-1] / P[i, -1]
        step = 0.02 * (1.0 + float(y @ y))
        for _ in range(N_RESTARTS):
            # a fresh simplex gets unstuck from kinks of the piecewise objective
            y = nelder_mead(obj, y, step)
            p = _gnomonic(y)
            val = obj(y)
            pol = _polish(dom, x, p, val)
            if pol is not None:
                break
        if pol is not None:
            results.append(pol)
        else:
            fm, _ = dom.f_bounds_batch(p[None, :])
            r = 1.0 / p[-1]
            z = np.concatenate(([r * np.cos(fm[0]), r * np.sin(fm[0])], r * p[:-1]))
            q = (x - np.cos(val) * z) / np.sin(val) if val > 0 else np.zeros_like(x)
            results.append((val, z, q, ()))
    return results


def _select(results, unique: bool):
    best = max(r[0] for r in results)
    if best <= 0:
        raise DomainError("no past horizon point is timelike related to x")
    winners = [r for r in results if r[0] >= best - TOL_TIE]
    feet = np.array([r[1] for r in winners])
    spread = float(np.max(np.linalg.norm(feet - feet[0], axis=1)))
    if unique and spread > TOL_UNIQUE:
        raise UniquenessViolationError(f"starts reached distinct feet (spread {spread:.3g})")
    top = max(winners, key=lambda r: r[0])
    return top, np.array([r[1] for r in results])


def cosmological_time(dom: AdsDomain, x, method: str = "search") -> float:
    """Cosmological time of x: the supremum of lengths of past causal curves."""
    x = _check_point(dom, x)
    if method == "exact":
        t = float(dom.solver.solve(x).tau[0])
        if not np.isfinite(t):
            raise DomainError("no realizing geodesic found")
        return t
    top, _ = _select(_search(dom, x), unique=False)
    return float(top[0])


def cosmological_time_exact(dom: AdsDomain, X: np.ndarray):
    """Batched exact solve; no membership check. Returns the raw solver result."""
    return dom.solver.solve(np.atleast_2d(X))


def reverse_cosmological_time(dom: AdsDomain, x, method: str = "search") -> float:
    """Time to the future horizon: the cosmological time of the reflected picture."""
    return cosmological_time(dom.reflected(), reflect(as_coords(x)), method=method)


def realizing_geodesic(dom: AdsDomain, x, method: str = "search", require_tight: bool = True) -> RealizingGeodesic:
    """The past timelike geodesic from the horizon to x whose length is tau(x)."""
    x = _check_point(dom, x)
    if method == "exact":
        res = dom.solver.solve(x)
        if not np.isfinite(res.tau[0]):
            raise DomainError("no realizing geodesic found")
        top = (float(res.tau[0]), res.foot[0], res.direction[0], res.active[0])
        feet = res.foot[:1]
    else:
        top, feet = _select(_search(dom, x), unique=True)
    tau, z, q, active = top
    if require_tight and tau >= np.pi / 2:
        raise DomainError(f"point outside the past tight region (tau = {tau:.6f})")
    foot = linear_to_conformal(z, t_ref=float(np.arctan2(z[1], z[0])))
    return RealizingGeodesic(foot, np.asarray(z), np.asarray(q), float(tau), tuple(active), feet)


def support_defect(dom: AdsDomain, geo: RealizingGeodesic) -> float:
    """How far the tangent is from being normal to a support hyperplane at the foot.

    Returns the larger of max |<z, u_i>| over the active generators and the
    residual of writing the tangent as a nonnegative combination of them.
    """
    if not geo.active:
        return np.inf
    UA = dom.U[list(geo.active)]
    z = geo.foot_linear
    on = float(np.max(np.abs(inner_eps(UA, z, dom.eps))))
    coef, *_ = np.linalg.lstsq(UA.T, geo.direction, rcond=None)
    resid = float(np.linalg.norm(UA.T @ coef - geo.direction))
    neg = float(max(0.0, -coef.min()))
    return max(on, resid, neg)


@dataclass
class LevelSample:
    points: np.ndarray
    normals: np.ndarray
    feet: np.ndarray
    active: list

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.normals))


def _shoot_one(dom: AdsDomain, a: float, seed: int, idx: int, max_tries: int = 200):
    rng = np.random.default_rng([seed, idx])
    for _ in range(max_tries):
        y = dom.sample_interior(1, rng)
        if not dom.contains_regular_batch(y)[0]:
            continue
        res = dom.solver.solve(y)
        if not np.isfinite(res.tau[0]):
            continue
        z, q = res.foot[0], res.direction[0]
        x = np.cos(a) * z + np.sin(a) * q
        nu = -np.sin(a) * z + np.cos(a) * q
        chk = dom.solver.solve(x)
        if abs(chk.tau[0] - a) > TOL_LEVEL or not dom.contains_regular_batch(x[None, :])[0]:
            continue
        return x, nu, z, res.active[0]
    return None


def level_sample(dom: AdsDomain, a: float, count: int, seed: int, threads: int = 1) -> LevelSample:
    """Points of the level set {tau = a} with their future unit normals.

    Each sample shoots the realizing geodesic of a random regular point to
    length a and keeps the endpoint only if its time is a within 1e-5.
    """
    if not (0.0 < a < np.pi / 2):
        raise RangeError(f"level must lie in (0, pi/2), got {a}")
    D = dom.n + 1
    if count <= 0:
        return LevelSample(np.zeros((0, D)), np.zeros((0, D)), np.zeros((0, D)), [])
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(lambda i: _shoot_one(dom, a, seed, i), range(count)))
    else:
        out = [_shoot_one(dom, a, seed, i) for i in range(count)]
    out = [o for o in out if o is not None]
    if not out:
        return LevelSample(np.zeros((0, D)), np.zeros((0, D)), np.zeros((0, D)), [])
    return LevelSample(np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                       np.array([o[2] for o in out]), [o[3] for o in out])


def _tangent_frame(x: np.ndarray, eps: np.ndarray):
    B = orthonormal_complement([x], eps, len(x) - 1)
    norms = inner_eps(B, B, eps)
    T = B[norms < 0][0]
    S = B[norms > 0]
    if inner_eps(T, time_rotation(x), eps) < 0:
        T = -T
    return T, S


def _directions(T: np.ndarray, S: np.ndarray, xi: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(xi, axis=1)
    unit = xi / np.where(r > 0, r, 1.0)[:, None]
    return np.cosh(r)[:, None] * T + np.sinh(r)[:, None] * (unit @ S)


def fan_directions(x: np.ndarray, eps: np.ndarray, count: int, rng: np.random.Generator,
                   max_rapidity: float = 6.0) -> np.ndarray:
    """Past-directed unit timelike tangents at x, rapidity vectors uniform in a ball."""
    T, S = _tangent_frame(x, eps)
    d = S.shape[0]
    xi = rng.standard_normal((count, d))
    xi *= (max_rapidity * rng.random(count) ** (1.0 / d) / np.linalg.norm(xi, axis=1))[:, None]
    return _directions(T, S, xi)


def brute_force_time(dom: AdsDomain, x, fan: int = 10_000, seed: int = 0, rounds: int = 10) -> float:
    """Longest past timelike geodesic from x before it leaves the domain.

    Half the fan is spread over all rapidities; the rest is spent in shrinking
    fans around the current longest direction.
    """
    x = np.asarray(as_coords(x), dtype=float)
    rng = np.random.default_rng(seed)
    T, S = _tangent_frame(x, dom.eps)
    d = S.shape[0]
    n0 = fan // 2
    xi = rng.standard_normal((n0, d))
    xi *= (6.0 * rng.random(n0) ** (1.0 / d) / np.linalg.norm(xi, axis=1))[:, None]
    U = dom.U

    def lengths(xi):
        V = np.ascontiguousarray(_directions(T, S, xi))
        return kernels.fan_exit(x, V, U, dom.eps, kernels.ADS)

    L = lengths(xi)
    seeds = xi[np.argsort(-L)[:6]]
    best = float(L.max())
    per = max((fan - n0) // (rounds * len(seeds)), 1)
    for best_xi in seeds:
        local = float(lengths(best_xi[None, :])[0])
        width = 0.5
        for _ in range(rounds):
            cand = best_xi + width * rng.standard_normal((per, d))
            Lc = lengths(cand)
            k = int(np.argmax(Lc))
            if Lc[k] > local:
                best_xi, local = cand[k], float(Lc[k])
            width *= 0.5
        best = max(best, local)
    return best
