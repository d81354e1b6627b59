"""Anti-de Sitter space in its linear, Klein and conformal models.

Linear points are arrays ``x = (x1, x2, xbar)`` on the quadric Q_{2,n-1} = -1.
The conformal chart is

    r = sqrt(x1^2 + x2^2) = sqrt(1 + |xbar|^2),  t = atan2(x2, x1),
    p = (xbar / r, 1 / r)  in the open upper hemisphere of S^{n-1},

with inverse ``x = (r cos t, r sin t, r pbar)``, ``r = 1 / p_n``. Boundary points
(t, q) with q on the equator correspond to the null rays (cos t, sin t, q).
For a linear point x and null vector u = (cos th, sin th, q) one has

    <x, u> = r (cos d(p, q) - cos(t - th)),

which is what makes the Klein and conformal descriptions of domains agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError
from .pseudo_linalg import AmbientVector, Signature, as_coords, form_diagonal, inner_eps

TOL_QUADRIC = 1e-9
TOL_CAUSAL = 1e-9


def ads_eps(n: int) -> np.ndarray:
    return form_diagonal(2, n + 1)


@dataclass(frozen=True, eq=False)
class AdsConformalPoint:
    """Point (t, p) of R x D^{n-1}; p is a unit vector with p[-1] >= 0."""

    t: float
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.shape[0] < 2:
            raise InvalidInputError("p must have at least 2 coordinates")
        if abs(np.linalg.norm(p) - 1.0) > 1e-9:
            raise InvalidInputError(f"p must be a unit vector, |p| = {np.linalg.norm(p)}")
        if p[-1] < -1e-12:
            raise InvalidInputError("p must lie in the closed upper hemisphere")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def on_boundary(self) -> bool:
        return abs(self.p[-1]) <= 1e-12


def conformal_to_linear(c: AdsConformalPoint) -> np.ndarray:
    if c.p[-1] <= 0.0 or c.on_boundary:
        raise DomainError("boundary points of the hemisphere are not in AdS")
    r = 1.0 / c.p[-1]
    return np.concatenate(([r * np.cos(c.t), r * np.sin(c.t)], r * c.p[:-1]))


def linear_to_conformal(x, t_ref: float | None = None) -> AdsConformalPoint:
    """Conformal coordinates of x; ``t`` unrolled to the branch nearest ``t_ref``.

    Without ``t_ref`` the time lies in (-pi, pi].
    """
    x = as_coords(x)
    r = float(np.hypot(x[0], x[1]))
    if r == 0.0:
        raise InvalidInputError("not a point of the quadric")
    t = float(np.arctan2(x[1], x[0]))
    if t_ref is not None:
        t += 2.0 * np.pi * np.round((t_ref - t) / (2.0 * np.pi))
    p = np.concatenate((x[2:] / r, [1.0 / r]))
    p = p / np.linalg.norm(p)
    return AdsConformalPoint(t, p)


def conformal_batch(X: np.ndarray):
    """Vectorized (t, P) for rows of X, with t in (-pi, pi]."""
    X = np.atleast_2d(X)
    r = np.hypot(X[:, 0], X[:, 1])
    t = np.arctan2(X[:, 1], X[:, 0])
    P = np.column_stack((X[:, 2:] / r[:, None], 1.0 / r))
    return t, P / np.linalg.norm(P, axis=1, keepdims=True)


def linear_batch(t: np.ndarray, P: np.ndarray) -> np.ndarray:
    r = 1.0 / P[:, -1]
    return np.column_stack((r * np.cos(t), r * np.sin(t), r[:, None] * P[:, :-1]))


def boundary_to_null(t: float, q) -> np.ndarray:
    """Null vector (cos t, sin t, q) of the boundary point (t, q)."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if abs(np.linalg.norm(q) - 1.0) > 1e-9:
        raise InvalidInputError("q must be a unit vector of the equator")
    return np.concatenate(([np.cos(t), np.sin(t)], q))


def is_on_quadric(x, tol: float = TOL_QUADRIC) -> bool:
    x = as_coords(x)
    return bool(abs(inner_eps(x, x, ads_eps(x.shape[0] - 1)) + 1.0) <= tol)


def normalize_to_quadric(X: np.ndarray) -> np.ndarray:
    """Radial projection of timelike vectors onto Q = -1 (rows or single vector)."""
    X = np.asarray(X, dtype=float)
    eps = ads_eps(X.shape[-1] - 1)
    q = inner_eps(X, X, eps)
    if np.any(q >= 0):
        raise DomainError("cannot normalize a non-timelike vector onto the AdS quadric")
    return X / np.sqrt(-q)[..., None]


def time_rotation(z) -> np.ndarray:
    """J z = (-z2, z1, 0, ...): the future-pointing Killing field at z."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    out[..., 0] = -z[..., 1]
    out[..., 1] = z[..., 0]
    return out


def is_future(v, z) -> bool:
    """Whether the tangent vector v at z points to the future (<v, Jz> < 0)."""
    v = np.asarray(v, dtype=float)
    return bool(inner_eps(v, time_rotation(z), ads_eps(v.shape[0] - 1)) < 0.0)


def reflect(x) -> np.ndarray:
    """Time reflection (x1, x2, xbar) -> (x1, -x2, xbar); t -> -t on the boundary."""
    y = np.array(as_coords(x), dtype=float, copy=True)
    y[..., 1] = -y[..., 1]
    return y


def geodesic_point(x, v, s: float) -> np.ndarray:
    """cos(s) x + sin(s) v for a unit timelike tangent v at x."""
    return np.cos(s) * np.asarray(x) + np.sin(s) * np.asarray(v)


def lorentz_distance_ads(x, y) -> float:
    """Length of the timelike geodesic joining x and y, or 0 if there is none."""
    x = as_coords(x)
    y = as_coords(y)
    m = -float(inner_eps(x, y, ads_eps(x.shape[0] - 1)))
    if -1.0 + TOL_CAUSAL < m < 1.0 - TOL_CAUSAL:
        return float(np.arccos(m))
    return 0.0


def causal_sign_boundary(x, y, tol: float = TOL_CAUSAL) -> str:
    """'timelike', 'causal' or 'none' for a null x against a point or null y."""
    x = as_coords(x)
    y = as_coords(y)
    ip = float(inner_eps(x, y, ads_eps(x.shape[0] - 1)))
    if ip > tol:
        return "timelike"
    if ip >= -tol:
        return "causal"
    return "none"


def as_ambient(x) -> AmbientVector:
    x = as_coords(x)
    return AmbientVector(x, Signature(2, x.shape[0]))
