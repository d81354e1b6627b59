"""de Sitter space, round balls of the boundary sphere, and domains B0+(S).

A point x of dS_n (the quadric Q_{1,n} = +1) corresponds to the round ball

    ball(x) = {q in S^{n-1} : <x, (1, q)> > 0},

with center xbar/|xbar| and radius arccos(x0/|xbar|); the inverse sends a ball
(c, r) to (cot r, c / sin r). Future points have smaller balls. For a finite
set of marks q_i, the domain consists of the points whose closed ball misses
every mark, i.e. <x, (1, q_i)> < 0 for all i.

Its past horizon is parametrized by the center w of the largest admissible
ball: ``horizon(w) = (cot rho, w / sin rho)`` with rho(w) = min_i d(w, q_i).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._solver import (ExactSolver, grid_size, nelder_mead, pick_starts, sphere_exp, sphere_points,
                      tangent_basis)
from .errors import DomainError, InvalidInputError, RangeError, UniquenessViolationError
from .pseudo_linalg import AmbientVector, Signature, as_coords, form_diagonal, inner_eps, orthonormal_complement

TOL_QUADRIC = 1e-9
TOL_MEMBERSHIP = 1e-9
TOL_CAUSAL = 1e-9
N_STARTS = 8
TOL_UNIQUE = 1e-5
TOL_TIE = 1e-7
TOL_LEVEL = 1e-5


def ds_eps(n: int) -> np.ndarray:
    return form_diagonal(1, n + 1)


def is_on_quadric(x, tol: float = TOL_QUADRIC) -> bool:
    x = as_coords(x)
    return bool(abs(inner_eps(x, x, ds_eps(x.shape[0] - 1)) - 1.0) <= tol)


def normalize_to_quadric(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    q = inner_eps(X, X, ds_eps(X.shape[-1] - 1))
    if np.any(q <= 0):
        raise DomainError("cannot normalize a non-spacelike vector onto the dS quadric")
    return X / np.sqrt(q)[..., None]


def reflect(x) -> np.ndarray:
    """Time reflection x0 -> -x0."""
    y = np.array(as_coords(x), dtype=float, copy=True)
    y[..., 0] = -y[..., 0]
    return y


def as_ambient(x) -> AmbientVector:
    x = as_coords(x)
    return AmbientVector(x, Signature(1, x.shape[0]))


@dataclass(frozen=True, eq=False)
class RoundBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if abs(np.linalg.norm(c) - 1.0) > 1e-9:
            raise InvalidInputError("ball center must be a unit vector")
        if not (0.0 < self.radius < np.pi):
            raise InvalidInputError(f"radius must lie in (0, pi), got {self.radius}")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, q) -> np.ndarray:
        q = np.atleast_2d(q)
        return np.arccos(np.clip(q @ self.center, -1.0, 1.0)) < self.radius


def ball_of_point(x) -> RoundBall:
    x = as_coords(x)
    xb = x[1:]
    nb = float(np.linalg.norm(xb))
    return RoundBall(xb / nb, float(np.arccos(np.clip(x[0] / nb, -1.0, 1.0))))


def point_of_ball(ball: RoundBall) -> np.ndarray:
    r = ball.radius
    return np.concatenate(([np.cos(r) / np.sin(r)], ball.center / np.sin(r)))


@dataclass(frozen=True, eq=False)
class DsBoundarySet:
    """Finite set of marks q_i in S^{n-1}; the domain lives in dS_n."""

    marks: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.marks, dtype=float))
        if M.shape[0] < 2:
            raise InvalidInputError("at least two marks are required (elliptic and parabolic "
                                    "cases have infinite cosmological time)")
        if M.shape[1] < 2:
            raise InvalidInputError("marks need at least 2 coordinates")
        if not np.all(np.isfinite(M)) or np.any(np.abs(np.linalg.norm(M, axis=1) - 1.0) > 1e-9):
            raise InvalidInputError("marks must be finite unit vectors")
        ang = np.arccos(np.clip(M @ M.T, -1.0, 1.0))
        np.fill_diagonal(ang, np.inf)
        if ang.min() <= 1e-6:
            raise InvalidInputError("marks must be pairwise distinct")
        M.setflags(write=False)
        object.__setattr__(self, "marks", M)
        U = np.column_stack((np.ones(len(M)), M))
        U.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "_cache", {})

    @property
    def n(self) -> int:
        return self.marks.shape[1]

    @property
    def eps(self) -> np.ndarray:
        return ds_eps(self.n)

    @property
    def solver(self) -> ExactSolver:
        if "solver" not in self._cache:
            self._cache["solver"] = ExactSolver(self.U, self.eps, kernels.DS, self.n)
        return self._cache["solver"]

    def klein_values(self, X) -> np.ndarray:
        return np.atleast_2d(X) @ (self.U * self.eps).T

    def contains_batch(self, X) -> np.ndarray:
        return np.all(self.klein_values(X) < -TOL_MEMBERSHIP, axis=1)

    def rho(self, W: np.ndarray) -> np.ndarray:
        """Distance from each center to the nearest mark."""
        return np.min(np.arccos(np.clip(np.atleast_2d(W) @ self.marks.T, -1.0, 1.0)), axis=1)

    def horizon(self, W: np.ndarray) -> np.ndarray:
        W = np.atleast_2d(W)
        r = self.rho(W)
        return np.column_stack((np.cos(r) / np.sin(r), W / np.sin(r)[:, None]))

    def sample_interior(self, count: int, rng: np.random.Generator,
                        lo: float = 0.02, hi: float = 0.98) -> np.ndarray:
        """Random domain points: a random center and a radius below rho(center)."""
        g = rng.standard_normal((count, self.n))
        W = g / np.linalg.norm(g, axis=1, keepdims=True)
        r = self.rho(W) * (lo + (hi - lo) * rng.random(count))
        return np.column_stack((np.cos(r) / np.sin(r), W / np.sin(r)[:, None]))


def contains_ds(bs: DsBoundarySet, x) -> bool:
    return bool(bs.contains_batch(np.asarray(as_coords(x))[None, :])[0])


def lorentz_distance_ds(x, y) -> float:
    """arccosh <x, y> for timelike related points, 0 otherwise."""
    x = as_coords(x)
    y = as_coords(y)
    ip = float(inner_eps(x, y, ds_eps(x.shape[0] - 1)))
    if ip <= 1.0 + TOL_CAUSAL:
        return 0.0
    return float(np.arccosh(ip))


def is_past_of(x, y) -> bool:
    """Whether x lies in the timelike past of y (ball(x) contains ball(y))."""
    x = as_coords(x)
    y = as_coords(y)
    ip = float(inner_eps(x, y, ds_eps(x.shape[0] - 1)))
    return ip > 1.0 + TOL_CAUSAL and y[0] > x[0]


@dataclass
class DsRealizingGeodesic:
    foot: np.ndarray
    direction: np.ndarray
    length: float
    active: tuple = ()
    start_feet: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def point(self, s: float) -> np.ndarray:
        return np.cosh(s) * self.foot + np.sinh(s) * self.direction

    def tangent(self, s: float) -> np.ndarray:
        return np.sinh(s) * self.foot + np.cosh(s) * self.direction


def _check_point(bs: DsBoundarySet, x) -> np.ndarray:
    x = np.asarray(as_coords(x), dtype=float)
    if x.shape != (bs.n + 1,):
        raise DomainError(f"expected a point of R^{bs.n + 1}")
    if not bs.contains_batch(x[None, :])[0]:
        raise DomainError("point is outside the domain")
    return x


def _polish(bs: DsBoundarySet, x: np.ndarray, w: np.ndarray, value: float):
    d = np.arccos(np.clip(bs.marks @ w, -1.0, 1.0))
    for tol in (1e-5, 1e-3):
        near = np.flatnonzero(d <= d.min() + tol)
        res = bs.solver.solve_restricted(x, near)
        if np.isfinite(res.tau[0]) and res.tau[0] >= value - 1e-7:
            return float(res.tau[0]), res.foot[0], res.direction[0], res.active[0]
    return None


def _search(bs: DsBoundarySet, x: np.ndarray):
    if "grid" not in bs._cache:
        bs._cache["grid"] = sphere_points(bs.n, grid_size(bs.n), seed=13)
    W = bs._cache["grid"]
    marks = np.ascontiguousarray(bs.marks)
    vals = kernels.ds_horizon_objective(x, W, marks)
    starts = pick_starts(W, vals, N_STARTS)
    results = []
    for i in starts:
        w0 = W[i]
        basis = tangent_basis(w0)

        def obj(y, w0=w0, basis=basis):
            return float(kernels.ds_horizon_objective(x, sphere_exp(w0, basis, y)[None, :], marks)[0])

        y = nelder_mead(obj, np.zeros(bs.n - 1), 0.05)
        w = sphere_exp(w0, basis, y)
        val = obj(y)
        pol = _polish(bs, x, w, val)
        if pol is not None:
            results.append(pol)
        else:
            z = bs.horizon(w)[0]
            q = (x - np.cosh(val) * z) / np.sinh(val) if val > 0 else np.zeros_like(x)
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
    return max(winners, key=lambda r: r[0]), np.array([r[1] for r in results])


def cosmological_time_ds(bs: DsBoundarySet, x, method: str = "search") -> float:
    x = _check_point(bs, x)
    if method == "exact":
        t = float(bs.solver.solve(x).tau[0])
        if not np.isfinite(t):
            raise DomainError("no realizing geodesic found")
        return t
    return float(_select(_search(bs, x), unique=False)[0][0])


def reverse_cosmological_time_ds(bs: DsBoundarySet, x, method: str = "search") -> float:
    """Time to the future horizon of the reflected domain, evaluated at x.

    The reflected domain is the image of ``bs`` under x0 -> -x0; its points
    are exactly the reflections of the points of ``bs``.
    """
    return cosmological_time_ds(bs, reflect(x), method=method)


def realizing_geodesic_ds(bs: DsBoundarySet, x, method: str = "search") -> DsRealizingGeodesic:
    x = _check_point(bs, x)
    if method == "exact":
        res = bs.solver.solve(x)
        if not np.isfinite(res.tau[0]):
            raise DomainError("no realizing geodesic found")
        top, feet = (float(res.tau[0]), res.foot[0], res.direction[0], res.active[0]), res.foot[:1]
    else:
        top, feet = _select(_search(bs, x), unique=True)
    return DsRealizingGeodesic(np.asarray(top[1]), np.asarray(top[2]), float(top[0]), tuple(top[3]), feet)


def two_mark_time(bs: DsBoundarySet, x) -> float:
    """Closed form arccosh(sqrt(Q(x_perp))) for two marks."""
    if len(bs.marks) != 2:
        raise InvalidInputError("closed form needs exactly two marks")
    x = as_coords(x)
    eps = bs.eps
    U = bs.U
    G = (U * eps) @ U.T
    c = np.linalg.solve(G, (U * eps) @ x)
    xp = x - c @ U
    return float(np.arccosh(np.sqrt(inner_eps(xp, xp, eps))))


def support_defect_ds(bs: DsBoundarySet, geo: DsRealizingGeodesic) -> float:
    if not geo.active:
        return np.inf
    UA = bs.U[list(geo.active)]
    on = float(np.max(np.abs(inner_eps(UA, geo.foot, bs.eps))))
    coef, *_ = np.linalg.lstsq(UA.T, geo.direction, rcond=None)
    resid = float(np.linalg.norm(UA.T @ coef - geo.direction))
    return max(on, resid, float(max(0.0, -coef.min())))


@dataclass
class DsLevelSample:
    points: np.ndarray
    normals: np.ndarray
    feet: np.ndarray
    active: list

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.normals))


def _shoot_one(bs: DsBoundarySet, a: float, seed: int, idx: int, max_tries: int = 200):
    rng = np.random.default_rng([seed, idx])
    for _ in range(max_tries):
        y = bs.sample_interior(1, rng)
        res = bs.solver.solve(y)
        if not np.isfinite(res.tau[0]):
            continue
        z, q = res.foot[0], res.direction[0]
        x = np.cosh(a) * z + np.sinh(a) * q
        nu = np.sinh(a) * z + np.cosh(a) * q
        if abs(bs.solver.solve(x).tau[0] - a) > TOL_LEVEL:
            continue
        return x, nu, z, res.active[0]
    return None


def level_sample_ds(bs: DsBoundarySet, a: float, count: int, seed: int, threads: int = 1) -> DsLevelSample:
    """Points of {tau = a} with future unit normals, by shooting realizing geodesics."""
    if not a > 0.0:
        raise RangeError(f"level must be positive, got {a}")
    D = bs.n + 1
    if count <= 0:
        return DsLevelSample(np.zeros((0, D)), np.zeros((0, D)), np.zeros((0, D)), [])
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(lambda i: _shoot_one(bs, a, seed, i), range(count)))
    else:
        out = [_shoot_one(bs, a, seed, i) for i in range(count)]
    out = [o for o in out if o is not None]
    if not out:
        return DsLevelSample(np.zeros((0, D)), np.zeros((0, D)), np.zeros((0, D)), [])
    return DsLevelSample(np.array([o[0] for o in out]), np.array([o[1] for o in out]),
                         np.array([o[2] for o in out]), [o[3] for o in out])


def brute_force_time_ds(bs: DsBoundarySet, x, fan: int = 10_000, seed: int = 0, rounds: int = 10) -> float:
    """Longest past timelike geodesic from x inside the domain (fan search)."""
    x = np.asarray(as_coords(x), dtype=float)
    eps = bs.eps
    B = orthonormal_complement([x], eps, len(x) - 1)
    norms = inner_eps(B, B, eps)
    T = B[norms < 0][0]
    if T[0] > 0:
        T = -T
    S = B[norms > 0]
    d = S.shape[0]
    rng = np.random.default_rng(seed)

    def lengths(xi):
        r = np.linalg.norm(xi, axis=1)
        unit = xi / np.where(r > 0, r, 1.0)[:, None]
        V = np.cosh(r)[:, None] * T + np.sinh(r)[:, None] * (unit @ S)
        return kernels.fan_exit(x, np.ascontiguousarray(V), bs.U, eps, kernels.DS)

    n0 = fan // 2
    xi = rng.standard_normal((n0, d))
    xi *= (6.0 * rng.random(n0) ** (1.0 / d) / np.linalg.norm(xi, axis=1))[:, None]
    L = lengths(xi)
    L = np.where(np.isfinite(L), L, -np.inf)
    seeds = xi[np.argsort(-L)[:6]]
    best = float(L.max())
    per = max((fan - n0) // (rounds * len(seeds)), 1)
    for best_xi in seeds:
        local = float(lengths(best_xi[None, :])[0])
        width = 0.5
        for _ in range(rounds):
            cand = best_xi + width * rng.standard_normal((per, d))
            Lc = lengths(cand)
            Lc = np.where(np.isfinite(Lc), Lc, -np.inf)
            k = int(np.argmax(Lc))
            if Lc[k] > local:
                best_xi, local = cand[k], float(Lc[k])
            width *= 0.5
        best = max(best, local)
    return best
