"""Umbilical spheres of dS_n, CMC foliations and the non-monotone profile.

A future unit timelike v and an offset t define the umbilical sphere

    S_(t, v) = {x in dS_n : <x, v> = -sinh t} = {sinh(t) v + cosh(t) w},

w ranging over the unit sphere of v^perp. With the future unit normal
cosh(t) v + sinh(t) w its mean curvature is -tanh t. A null future u and an
offset c < 0 define the parabolic leaf {<x, u> = c}, of mean curvature -1.

A curve t -> (t, v(t)) in R x H^n gives a foliation exactly when its leaves
are pairwise disjoint, which happens exactly when v moves at hyperbolic speed
below 1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, RangeError
from .pseudo_linalg import as_coords, form_diagonal, inner_eps, orthonormal_complement

TOL_MEMBER = 1e-9
GUARD = 1e-3


@dataclass(frozen=True, eq=False)
class UmbilicalLeaf:
    v: np.ndarray
    t: float

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(-1)
        if v.shape[0] < 3:
            raise InvalidInputError("v must live in R^{n+1} with n >= 2")
        eps = form_diagonal(1, v.shape[0])
        q = float(inner_eps(v, v, eps))
        if v[0] <= 0:
            raise InvalidInputError("v must be future-pointing (first coordinate > 0)")
        if abs(q) <= 1e-9 * float(v @ v):
            if self.t == 0:
                raise InvalidInputError("parabolic leaves need a nonzero offset")
        elif abs(q + 1.0) > 1e-9:
            raise InvalidInputError("timelike v must satisfy <v, v> = -1")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.v.shape[0] - 1

    @property
    def eps(self) -> np.ndarray:
        return form_diagonal(1, self.v.shape[0])

    @property
    def parabolic(self) -> bool:
        return abs(float(inner_eps(self.v, self.v, self.eps))) <= 1e-9 * float(self.v @ self.v)

    @property
    def offset(self) -> float:
        """Value of <x, v> on the leaf."""
        return self.t if self.parabolic else -np.sinh(self.t)

    def value(self, X: np.ndarray) -> np.ndarray:
        """A defining function increasing toward the future, zero-crossing at the leaf."""
        ip = inner_eps(np.atleast_2d(X), self.v, self.eps)
        if self.parabolic:
            return -np.log(-ip) if self.t < 0 else np.log(ip)
        return np.arcsinh(-ip)

    @property
    def level(self) -> float:
        if self.parabolic:
            return -np.log(-self.t) if self.t < 0 else np.log(self.t)
        return self.t

    def sample(self, count: int, rng: np.random.Generator):
        """Random points of a timelike leaf with their future unit normals."""
        if self.parabolic:
            raise InvalidInputError("sampling is implemented for timelike leaves")
        W = self.sphere_frame()
        g = rng.standard_normal((count, W.shape[0]))
        w = (g / np.linalg.norm(g, axis=1, keepdims=True)) @ W
        X = np.sinh(self.t) * self.v + np.cosh(self.t) * w
        N = np.cosh(self.t) * self.v + np.sinh(self.t) * w
        return X, N

    def sphere_frame(self) -> np.ndarray:
        """Orthonormal basis of v^perp (spacelike)."""
        return orthonormal_complement([self.v], self.eps, self.n)


def leaf_membership(leaf: UmbilicalLeaf, x) -> bool:
    x = as_coords(x)
    return bool(abs(float(inner_eps(x, leaf.v, leaf.eps)) - leaf.offset) <= TOL_MEMBER)


def leaf_mean_curvature(leaf: UmbilicalLeaf) -> float:
    """-tanh t for timelike leaves; -1 for parabolic leaves with c < 0, +1 for c > 0."""
    if leaf.parabolic:
        return -1.0 if leaf.t < 0 else 1.0
    return float(-np.tanh(leaf.t))


def parabolic_leaf(u, c: float) -> UmbilicalLeaf:
    """Leaf {<x, u> = c} for a future null u; c < 0 keeps it in the future of u's horosphere."""
    return UmbilicalLeaf(np.asarray(u, dtype=float), float(c))


def hyperbolic_distance(v, w) -> float:
    eps = form_diagonal(1, len(v))
    return float(np.arccosh(max(1.0, -float(inner_eps(v, w, eps)))))


@dataclass(frozen=True, eq=False)
class FoliationCurve:
    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        V = np.atleast_2d(np.asarray(self.v, dtype=float))
        if len(t) != len(V):
            raise InvalidInputError("t and v lengths differ")
        if len(t) < 2:
            raise InvalidInputError("a foliation curve needs at least 2 samples")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("curve samples must be ordered by increasing t")
        eps = form_diagonal(1, V.shape[1])
        if np.any(np.abs(inner_eps(V, V, eps) + 1.0) > 1e-9) or np.any(V[:, 0] <= 0):
            raise InvalidInputError("curve points must lie on the future unit hyperboloid")
        t.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", V)

    @classmethod
    def from_samples(cls, samples) -> "FoliationCurve":
        samples = list(samples)
        return cls(np.array([s[0] for s in samples]), np.array([s[1] for s in samples]))

    def leaves(self) -> list[UmbilicalLeaf]:
        return [UmbilicalLeaf(v, t) for t, v in zip(self.t, self.v)]

    def speeds(self) -> np.ndarray:
        """Discrete hyperbolic speed d(v_i, v_i+1) / (t_i+1 - t_i)."""
        d = np.array([hyperbolic_distance(a, b) for a, b in zip(self.v[:-1], self.v[1:])])
        return d / np.diff(self.t)


@dataclass
class FoliationVerdict:
    status: str                           # ok | not_timelike | leaves_intersect
    index: Optional[int] = None           # first non-timelike step
    pair: Optional[tuple] = None          # intersecting leaves found by brute force
    marginal: bool = False                # some step speed within the guard band of 1
    agree: bool = True                    # discrete and brute-force verdicts agree

    def __str__(self):
        if self.status == "not_timelike":
            return f"not_timelike({self.index})"
        if self.status == "leaves_intersect":
            return f"leaves_intersect{self.pair}"
        return "ok"


def leaves_intersect_brute(a: UmbilicalLeaf, b: UmbilicalLeaf, samples: int = 2000,
                           seed: int = 0, refine: int = 60) -> bool:
    """Sample leaf a and look for a sign change of <x, v_b> - offset_b.

    Samples are followed by projected gradient steps on the sphere toward the
    minimum and maximum of the test function.
    """
    rng = np.random.default_rng(seed)
    W = a.sphere_frame()
    eps = a.eps
    wb = W @ (eps * b.v)                    # <w, v_b> for each frame vector
    base = np.sinh(a.t) * float(inner_eps(a.v, b.v, eps)) - b.offset

    def f(Y):
        return base + np.cosh(a.t) * (Y @ wb)

    Y = rng.standard_normal((samples, W.shape[0]))
    Y /= np.linalg.norm(Y, axis=1, keepdims=True)
    vals = f(Y)
    if vals.min() <= 0.0 <= vals.max():
        return True
    lo = Y[np.argmin(vals)].copy()
    hi = Y[np.argmax(vals)].copy()
    grad = np.cosh(a.t) * wb
    step = 0.2
    for _ in range(refine):
        for y, sgn in ((lo, -1.0), (hi, 1.0)):
            g = grad - (grad @ y) * y
            y += sgn * step * g / (np.linalg.norm(g) + 1e-300)
            y /= np.linalg.norm(y)
        step *= 0.9
    return bool(f(lo[None, :])[0] <= 0.0 <= f(hi[None, :])[0])


def validate_foliation(curve: FoliationCurve, samples: int = 2000, seed: int = 0,
                       threads: int = 1) -> FoliationVerdict:
    """Discrete timelike check plus an independent brute-force disjointness check."""
    speeds = curve.speeds()
    bad = np.flatnonzero(speeds >= 1.0)
    marginal = bool(np.any(np.abs(speeds - 1.0) <= GUARD))
    leaves = curve.leaves()
    pairs = [(i, j) for i in range(len(leaves)) for j in range(i + 1, len(leaves))]

    def check(ij):
        i, j = ij
        return leaves_intersect_brute(leaves[i], leaves[j], samples, seed + 7919 * i + j)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            hits = list(ex.map(check, pairs))
    else:
        hits = [check(p) for p in pairs]
    hit_pairs = [p for p, h in zip(pairs, hits) if h]
    discrete_ok = len(bad) == 0
    brute_ok = not hit_pairs
    agree = discrete_ok == brute_ok
    if not discrete_ok:
        i = int(bad[0])
        pair = (i, i + 1) if (i, i + 1) in hit_pairs else (hit_pairs[0] if hit_pairs else None)
        return FoliationVerdict("not_timelike", index=i, pair=pair, marginal=marginal, agree=agree)
    if not brute_ok:
        return FoliationVerdict("leaves_intersect", pair=hit_pairs[0], marginal=marginal, agree=agree)
    return FoliationVerdict("ok", marginal=marginal, agree=agree)


def geodesic_curve(v0, direction, speed: float, t_values) -> FoliationCurve:
    """Curve moving along a hyperbolic geodesic at constant speed."""
    v0 = np.asarray(v0, dtype=float)
    d = np.asarray(direction, dtype=float)
    eps = form_diagonal(1, len(v0))
    d = d + inner_eps(d, v0, eps) * v0
    d = d / np.sqrt(inner_eps(d, d, eps))
    t = np.asarray(t_values, dtype=float)
    s = speed * (t - t[0])
    return FoliationCurve(t, np.cosh(s)[:, None] * v0 + np.sinh(s)[:, None] * d)


@dataclass
class CounterexampleProfile:
    a: np.ndarray
    H: np.ndarray
    monotone: bool

    def __iter__(self):
        return iter(zip(self.a, self.H))

    def __len__(self):
        return len(self.a)


def two_mark_curvature(n: int, a):
    """-(1/(n-1)) coth a - ((n-2)/(n-1)) tanh a."""
    a = np.asarray(a, dtype=float)
    return -(1.0 / np.tanh(a)) / (n - 1) - (n - 2) / (n - 1) * np.tanh(a)


def counterexample_profile(n: int, a_grid) -> CounterexampleProfile:
    if n < 3:
        raise RangeError("n must be at least 3")
    a = np.asarray(list(a_grid), dtype=float)
    if np.any(a <= 0):
        raise RangeError("levels must be positive")
    H = two_mark_curvature(n, a)
    order = np.argsort(a)
    dH = np.diff(H[order])
    monotone = bool(np.all(dH > 0) or np.all(dH < 0)) if len(a) > 1 else True
    return CounterexampleProfile(a, H, monotone)


def counterexample_peak(n: int) -> tuple[float, float]:
    """Interior maximum of the profile: tanh a* = 1/sqrt(n-2)."""
    if n < 4:
        raise RangeError("the profile is monotone for n = 3")
    a = float(np.arctanh(1.0 / np.sqrt(n - 2)))
    return a, float(two_mark_curvature(n, a))
