"""Achronal boundary data, invisible domains and their horizons in AdS.

Boundary data is a finite sample {(p_i, theta_i)} of a 1-Lipschitz graph over
the equator S^{n-2}. The domain is the region between the graphs of

    f-(p) = max_i (theta_i - d(p, p_i)),   f+(p) = min_i (theta_i + d(p, p_i))

in the conformal model. In the Klein model it is cut out by <x, u_i> < 0,
with u_i = (cos theta_i, sin theta_i, p_i) the null lift of each sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from ._solver import ExactSolver, pick_starts, sphere_points
from .ads_model import (AdsConformalPoint, ads_eps, boundary_to_null, conformal_batch,
                        linear_batch, linear_to_conformal)
from .errors import DegenerateFiberError, DomainError, InvalidInputError
from .pseudo_linalg import as_coords, spherical_distance

TOL_MEMBERSHIP = 1e-9
TOL_LIPSCHITZ = 1e-9


@dataclass(frozen=True, eq=False)
class AchronalData:
    """Samples p_i of the equator S^{n-2} (rows of ``points``) with times ``theta``."""

    points: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        th = np.asarray(self.theta, dtype=float).reshape(-1)
        if P.shape[0] == 0 or th.shape[0] == 0:
            raise InvalidInputError("achronal data must be nonempty")
        if P.shape[0] != th.shape[0]:
            raise InvalidInputError("points and theta lengths differ")
        if P.shape[1] < 2:
            raise InvalidInputError("equator points need at least 2 coordinates (n >= 3)")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(th))):
            raise InvalidInputError("achronal data must be finite")
        if np.any(np.abs(np.linalg.norm(P, axis=1) - 1.0) > 1e-9):
            raise InvalidInputError("equator points must be unit vectors")
        P.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_pairs(cls, pairs) -> "AchronalData":
        pairs = list(pairs)
        if not pairs:
            raise InvalidInputError("achronal data must be nonempty")
        return cls(np.array([p for p, _ in pairs], dtype=float), np.array([t for _, t in pairs], dtype=float))

    @property
    def n(self) -> int:
        return self.points.shape[1] + 1

    @property
    def embedded(self) -> np.ndarray:
        """Samples as points of S^{n-1} (last coordinate zero)."""
        return np.column_stack((self.points, np.zeros(len(self.theta))))

    def reflected(self) -> "AchronalData":
        return AchronalData(self.points, -self.theta)


def validate(data: AchronalData) -> str:
    """'ok', 'pure_lightlike' or 'not_lipschitz'."""
    if not isinstance(data, AchronalData):
        raise InvalidInputError("validate expects AchronalData")
    P, th = data.points, data.theta
    dots = np.clip(P @ P.T, -1.0, 1.0)
    dist = spherical_distance(P[:, None, :], P[None, :, :])
    gap = np.abs(th[:, None] - th[None, :])
    if np.any(gap > dist + TOL_LIPSCHITZ):
        return "not_lipschitz"
    antipodal = dots <= -1.0 + 1e-12
    if np.any(antipodal & (np.abs(gap - np.pi) <= 1e-9)):
        return "pure_lightlike"
    return "ok"


class AdsDomain:
    """Invisible domain of finite achronal data; immutable after construction."""

    def __init__(self, data: AchronalData):
        status = validate(data)
        if status == "pure_lightlike":
            raise DomainError("pure-lightlike data: the invisible domain is empty")
        if status == "not_lipschitz":
            raise InvalidInputError("achronal data violates the 1-Lipschitz bound")
        self.data = data
        self.n = data.n
        self.eps = ads_eps(self.n)
        self.U = np.array([boundary_to_null(t, p) for p, t in zip(data.points, data.theta)])
        self.U.setflags(write=False)
        self._marks = np.ascontiguousarray(data.embedded)
        self._solver = None
        self._equator_grid = None

    @classmethod
    def from_pairs(cls, pairs) -> "AdsDomain":
        return cls(AchronalData.from_pairs(pairs))

    @property
    def solver(self) -> ExactSolver:
        if self._solver is None:
            self._solver = ExactSolver(self.U, self.eps, kernels.ADS, self.n)
        return self._solver

    def reflected(self) -> "AdsDomain":
        return AdsDomain(self.data.reflected())

    def f_bounds_batch(self, P: np.ndarray):
        P = np.ascontiguousarray(np.atleast_2d(P), dtype=float)
        return kernels.f_bounds(P, self._marks, np.ascontiguousarray(self.data.theta))

    def klein_values(self, X: np.ndarray) -> np.ndarray:
        """<x, u_i> for every row x; shape (N, m)."""
        return np.atleast_2d(X) @ (self.U * self.eps).T

    def contains_klein_batch(self, X: np.ndarray) -> np.ndarray:
        return np.all(self.klein_values(X) < -TOL_MEMBERSHIP, axis=1)

    def contains_conformal_batch(self, t: np.ndarray, P: np.ndarray) -> np.ndarray:
        fm, fp = self.f_bounds_batch(P)
        return (fm + TOL_MEMBERSHIP < t) & (t < fp - TOL_MEMBERSHIP) & (np.atleast_2d(P)[:, -1] > 0)

    def completed_null(self, Q: np.ndarray) -> np.ndarray:
        """Null lifts (cos f-(q), sin f-(q), q) of equator points q (rows)."""
        Q = np.atleast_2d(Q)
        fm, _ = self.f_bounds_batch(np.column_stack((Q, np.zeros(len(Q)))))
        return np.column_stack((np.cos(fm), np.sin(fm), Q))

    def regular_margin(self, X: np.ndarray, refine: bool = True) -> np.ndarray:
        """max over the equator of <x, u(q)> for the completed boundary graph.

        Negative exactly on the regular domain bounded by the graph of f- over
        the whole equator, which is where the cosmological time is attained.
        With ``refine`` the value is polished wherever the grid maximum is
        negative; nonnegative grid values are returned as lower bounds.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._equator_grid is None:
            grid, cover = _equator_grid(self.n - 1)
            self._equator_grid = (grid, self.completed_null(grid) * self.eps, cover)
        grid, EUg, cover = self._equator_grid
        vals = X @ EUg.T
        best = np.argmax(vals, axis=1)
        out = vals[np.arange(len(X)), best]
        if not refine:
            return out
        starts = 1 if self.n == 3 else 8
        todo = np.flatnonzero(out < 0.0)        # the grid value is already a lower bound
        if todo.size == 0:
            return out
        owner, Q0 = [], []
        for k in todo:
            for j in pick_starts(grid, vals[k], starts, min_sep=cover):
                owner.append(k)
                Q0.append(grid[j])
        owner = np.array(owner)
        best = _pattern_search(self, X[owner] * self.eps, np.array(Q0), cover)
        np.maximum.at(out, owner, best)
        return out

    def contains_regular_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        inside = self.contains_klein_batch(X)
        res = np.zeros(len(X), dtype=bool)
        if inside.any():
            res[inside] = self.regular_margin(X[inside]) < -TOL_MEMBERSHIP
        return res

    def unrolled_time(self, X: np.ndarray) -> np.ndarray:
        """Conformal time of each row, on the branch through its f-/f+ column."""
        t, P = conformal_batch(X)
        fm, fp = self.f_bounds_batch(P)
        mid = 0.5 * (fm + fp)
        return t + 2.0 * np.pi * np.round((mid - t) / (2.0 * np.pi))

    def sample_interior(self, count: int, rng: np.random.Generator, margin: float = 1e-3) -> np.ndarray:
        """Random linear points of the domain (conformal columns sampled uniformly)."""
        out = []
        while sum(len(o) for o in out) < count:
            g = rng.standard_normal((2 * count + 8, self.n))
            P = g / np.linalg.norm(g, axis=1, keepdims=True)
            P[:, -1] = np.abs(P[:, -1])
            P = P[P[:, -1] > 0.02]
            fm, fp = self.f_bounds_batch(P)
            keep = fp - fm > 2 * margin
            P, fm, fp = P[keep], fm[keep], fp[keep]
            t = fm + margin + rng.random(len(fm)) * (fp - fm - 2 * margin)
            out.append(linear_batch(t, P))
        return np.vstack(out)[:count]


def _householder_frames(Q: np.ndarray) -> np.ndarray:
    """Rows (S, d, d+1): orthonormal tangent frames of the sphere at each row of Q."""
    S, D = Q.shape
    e = np.zeros(D)
    e[0] = 1.0
    sign = np.where(Q[:, 0] > 0, -1.0, 1.0)
    v = Q * sign[:, None] - e                     # reflection taking e0 to sign*q
    nv = np.einsum("sk,sk->s", v, v)
    nv = np.where(nv > 1e-30, nv, 1.0)
    H = np.eye(D)[None] - 2.0 * v[:, :, None] * v[:, None, :] / nv[:, None, None]
    return H[:, :, 1:].transpose(0, 2, 1)


def _pattern_search(dom: "AdsDomain", EX: np.ndarray, Q0: np.ndarray, radius: float,
                    iters: int = 120, shrink: float = 0.5) -> np.ndarray:
    """Batched shrinking-patch search for max_q <x, u(q)>, one run per row."""
    d = Q0.shape[1] - 1
    m = {1: 9, 2: 7}.get(d, 5)
    axis = np.linspace(-1.0, 1.0, m)
    offs = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    Q0 = Q0.copy()
    best = np.einsum("sk,sk->s", dom.completed_null(Q0), EX)
    rad = np.full(len(Q0), radius)
    live = np.ones(len(Q0), dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(live)
        if idx.size == 0:
            break
        B = _householder_frames(Q0[idx])
        Y = rad[idx, None, None] * offs[None]
        r = np.linalg.norm(Y, axis=2)
        safe = np.where(r > 0, r, 1.0)
        V = np.einsum("smd,sdk->smk", Y, B)
        Q = np.cos(r)[..., None] * Q0[idx, None, :] + (np.sin(r) / safe)[..., None] * V
        Q /= np.linalg.norm(Q, axis=2, keepdims=True)
        N = dom.completed_null(Q.reshape(-1, d + 1)).reshape(len(idx), len(offs), -1)
        vals = np.einsum("smk,sk->sm", N, EX[idx])
        j = np.argmax(vals, axis=1)
        top = vals[np.arange(len(idx)), j]
        up = top > best[idx] + 1e-15
        best[idx[up]] = top[up]
        Q0[idx[up]] = Q[np.flatnonzero(up), j[up]]
        rad[idx[~up]] *= shrink
        live[idx] = rad[idx] > 1e-10
    return best


@lru_cache(maxsize=None)
def _equator_grid(d: int) -> tuple[np.ndarray, float]:
    """Fixed equator grid and a safe bound on its covering radius."""
    if d == 2:
        ang = np.linspace(0.0, 2 * np.pi, 2048, endpoint=False)
        return np.column_stack((np.cos(ang), np.sin(ang))), 2.0 * np.pi / 2048
    grid = sphere_points(d, 3000 * (d - 1), seed=7)
    probes = sphere_points(d, 20000, seed=11)
    worst = float(np.arccos(np.clip((probes @ grid.T).max(axis=1), -1.0, 1.0)).max())
    return grid, 2.0 * worst


def f_bounds(data: AchronalData, p) -> tuple[float, float]:
    """(f-(p), f+(p)) for a point p of the closed upper hemisphere."""
    p = np.asarray(p, dtype=float).reshape(1, -1)
    if p.shape[1] != data.n:
        raise InvalidInputError(f"p must have {data.n} coordinates")
    fm, fp = kernels.f_bounds(np.ascontiguousarray(p), np.ascontiguousarray(data.embedded),
                              np.ascontiguousarray(data.theta))
    return float(fm[0]), float(fp[0])


def contains_conformal(dom: AdsDomain, c: AdsConformalPoint) -> bool:
    return bool(dom.contains_conformal_batch(np.array([c.t]), c.p[None, :])[0])


def contains_klein(dom: AdsDomain, x) -> bool:
    return bool(dom.contains_klein_batch(np.asarray(as_coords(x))[None, :])[0])


def horizon_point(dom: AdsDomain, p, which: str = "past") -> AdsConformalPoint:
    """Point of the past (graph of f-) or future (graph of f+) horizon above p."""
    p = np.asarray(p, dtype=float)
    fm, fp = f_bounds(dom.data, p)
    if fp - fm <= 1e-12:
        raise DegenerateFiberError(f"empty column over p (f- = f+ = {fm})")
    if which == "past":
        return AdsConformalPoint(fm, p)
    if which == "future":
        return AdsConformalPoint(fp, p)
    raise InvalidInputError("which must be 'past' or 'future'")


def horizon_linear(dom: AdsDomain, p, which: str = "past") -> np.ndarray:
    c = horizon_point(dom, p, which)
    r = 1.0 / c.p[-1]
    return np.concatenate(([r * np.cos(c.t), r * np.sin(c.t)], r * c.p[:-1]))


def equatorial_data(n: int, count: int, seed: int | None = None) -> AchronalData:
    """Samples of the totally geodesic boundary sphere theta = 0.

    n = 3 uses equally spaced points of the circle; higher n uses a
    deterministic spread that contains the origin well inside its hull.
    """
    if n == 3:
        ang = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        P = np.column_stack((np.cos(ang), np.sin(ang)))
    else:
        rng = np.random.default_rng(0 if seed is None else seed)
        d = n - 1
        base = np.vstack((np.eye(d), -np.eye(d)))
        extra = rng.standard_normal((max(count - 2 * d, 0), d))
        P = np.vstack((base, extra))[:max(count, 2 * d)]
        P /= np.linalg.norm(P, axis=1, keepdims=True)
    return AchronalData(P, np.zeros(P.shape[0]))


def conformal_of(dom: AdsDomain, x) -> AdsConformalPoint:
    x = as_coords(x)
    return linear_to_conformal(x, t_ref=float(dom.unrolled_time(x[None, :])[0]))

