"""Normal flow of spacelike hypersurfaces in dS_n and the Weingarten evolution.

A patch carries, per sample, the point u, its future unit normal u* and the
shape operator B, defined by B(du) = -du*. Flowing for time t gives

    u_t = cosh(t) u + sinh(t) u*,   u*_t = sinh(t) u + cosh(t) u*,
    B_t = -(tanh(t) I - B)(I - tanh(t) B)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import FlowBreakdownError, InvalidInputError
from .pseudo_linalg import as_coords, form_diagonal, inner_eps, orthonormal_complement

TOL_ORTHO = 1e-9
TOL_AF = 1e-6


def _check_pair(u: np.ndarray, ustar: np.ndarray):
    eps = form_diagonal(1, len(u))
    tol = TOL_ORTHO * (1.0 + float(u @ u) + float(ustar @ ustar))   # relative to the Euclidean scale
    if abs(inner_eps(u, u, eps) - 1.0) > tol:
        raise InvalidInputError("u must lie on the de Sitter quadric")
    if abs(inner_eps(ustar, ustar, eps) + 1.0) > tol or ustar[0] <= 0:
        raise InvalidInputError("u* must be a future unit timelike vector")
    if abs(inner_eps(u, ustar, eps)) > tol:
        raise InvalidInputError("u and u* must be orthogonal")


def flow_point(u, ustar, t: float) -> np.ndarray:
    u = np.asarray(as_coords(u), dtype=float)
    ustar = np.asarray(as_coords(ustar), dtype=float)
    _check_pair(u, ustar)
    return np.cosh(t) * u + np.sinh(t) * ustar


def flow_normal(u, ustar, t: float) -> np.ndarray:
    return np.sinh(t) * np.asarray(u) + np.cosh(t) * np.asarray(ustar)


def weingarten_evolution(B, t: float) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise InvalidInputError("B must be a square matrix")
    th = np.tanh(t)
    eye = np.eye(B.shape[0])
    M = eye - th * B
    if np.linalg.cond(M) > 1e12:
        raise FlowBreakdownError(f"I - tanh(t) B is singular at t = {t}")
    return -(th * eye - B) @ np.linalg.inv(M)


def evolve_eigenvalue(lam, t):
    th = np.tanh(t)
    return -(th - np.asarray(lam)) / (1.0 - th * np.asarray(lam))


@dataclass
class ImmersedPatch:
    u: np.ndarray          # (N, n+1)
    ustar: np.ndarray      # (N, n+1)
    shape: np.ndarray      # (N, n-1, n-1)

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.ustar = np.atleast_2d(np.asarray(self.ustar, dtype=float))
        self.shape = np.asarray(self.shape, dtype=float).reshape(len(self.u), *np.shape(self.shape)[-2:])
        for a, b in zip(self.u, self.ustar):
            _check_pair(a, b)

    def __len__(self):
        return len(self.u)

    def mean_curvature(self) -> np.ndarray:
        return np.trace(self.shape, axis1=1, axis2=2) / self.shape.shape[-1]

    def flowed(self, t: float) -> "ImmersedPatch":
        return ImmersedPatch(np.cosh(t) * self.u + np.sinh(t) * self.ustar,
                             np.sinh(t) * self.u + np.cosh(t) * self.ustar,
                             np.array([weingarten_evolution(B, t) for B in self.shape]))


@dataclass
class AlmostFuchsianVerdict:
    ok: bool
    index: int | None = None
    eigenvalue: float | None = None

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "yes" if self.ok else f"no({self.index}, {self.eigenvalue:.6g})"


def almost_fuchsian_check(patch: ImmersedPatch, tol: float = TOL_AF) -> AlmostFuchsianVerdict:
    for k, B in enumerate(patch.shape):
        if not np.allclose(B, B.T, atol=1e-10):
            raise InvalidInputError(f"shape matrix {k} is not symmetric")
        ev = np.linalg.eigvalsh(B)
        if ev.max() >= -1.0 - tol:
            return AlmostFuchsianVerdict(False, k, float(ev.max()))
    return AlmostFuchsianVerdict(True)


def umbilical_patch(center, radius: float, count: int, seed: int = 0) -> ImmersedPatch:
    """Future distance sphere of ``radius`` around ``center``; shape -coth(radius) I.

    Points are cosh(r) c + sinh(r) w with w future unit timelike orthogonal to c.
    """
    c = np.asarray(center, dtype=float)
    eps = form_diagonal(1, len(c))
    n = len(c) - 1
    B = orthonormal_complement([c], eps, n)
    norms = inner_eps(B, B, eps)
    T = B[norms < 0][0]
    T = T if T[0] > 0 else -T
    S = B[norms > 0]
    rng = np.random.default_rng(seed)
    xi = 0.5 * rng.standard_normal((count, S.shape[0]))
    r = np.linalg.norm(xi, axis=1)
    unit = xi / np.where(r > 0, r, 1.0)[:, None]
    W = np.cosh(r)[:, None] * T + np.sinh(r)[:, None] * (unit @ S)
    u = np.cosh(radius) * c + np.sinh(radius) * W
    us = np.sinh(radius) * c + np.cosh(radius) * W
    shape = np.repeat((-1.0 / np.tanh(radius)) * np.eye(n - 1)[None], count, axis=0)
    return ImmersedPatch(u, us, shape)


def shape_from_immersion(u_map: Callable[[np.ndarray], np.ndarray],
                         ustar_map: Callable[[np.ndarray], np.ndarray],
                         params: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Finite-difference shape operator -pinv(du) du* in parameter coordinates."""
    params = np.asarray(params, dtype=float)
    d = len(params)
    Ju = np.empty((len(u_map(params)), d))
    Js = np.empty_like(Ju)
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        Ju[:, i] = (u_map(params + e) - u_map(params - e)) / (2 * step)
        Js[:, i] = (ustar_map(params + e) - ustar_map(params - e)) / (2 * step)
    return -np.linalg.pinv(Ju) @ Js
