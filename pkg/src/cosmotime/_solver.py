"""Machinery shared by the AdS and dS cosmological-time solvers.

``ExactSolver`` wraps the active-set kernel. ``multistart_maximize`` runs the
grid plus Nelder-Mead search used by the variational definition of the time.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels

TOL_C = 1e-12
TOL_F = 1e-11


@dataclass
class ExactResult:
    tau: np.ndarray      # -inf where no candidate exists
    foot: np.ndarray
    direction: np.ndarray
    active: list         # tuple of mark indices per point (empty if none)


class ExactSolver:
    """Maximizes <x, z> over the past horizon by enumerating active sets.

    ``U`` holds the null generators (one per row), ``model`` is ``kernels.ADS``
    or ``kernels.DS`` and ``n`` the spacetime dimension.
    """

    def __init__(self, U: np.ndarray, eps: np.ndarray, model: int, n: int):
        self.U = np.ascontiguousarray(U, dtype=float)
        self.eps = np.asarray(eps, dtype=float)
        self.model = model
        self.n = n
        self._table = None

    @property
    def table(self):
        if self._table is None:
            self._table = kernels.prepare_subsets(self.U, self.eps, self.n)
        return self._table

    def _run(self, X, table) -> ExactResult:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        subsets, sizes, ginv = table
        tau, foot, dirn, best = kernels.active_set(
            X, self.U, self.eps, subsets, sizes, ginv, self.model, TOL_C, TOL_F)
        active = [tuple(int(i) for i in subsets[b, :sizes[b]]) if b >= 0 else () for b in best]
        return ExactResult(tau, foot, dirn, active)

    def solve(self, X) -> ExactResult:
        return self._run(X, self.table)

    def solve_restricted(self, X, indices: Sequence[int]) -> ExactResult:
        """Same as :meth:`solve` but only active sets drawn from ``indices``."""
        idx = sorted(set(int(i) for i in indices))
        try:
            subsets, sizes, ginv = self.table
        except ValueError:          # full table too large; build the restricted one
            pass
        else:
            member = np.zeros(len(self.U) + 1, dtype=bool)
            member[idx] = True
            pad = np.arange(subsets.shape[1])[None, :] >= sizes[:, None]
            keep = np.all(member[subsets] | pad, axis=1)
            if keep.any():
                return self._run(X, (subsets[keep], sizes[keep], ginv[keep]))
        kmax = min(self.n, len(idx))
        rows = [A for k in range(2, kmax + 1) for A in combinations(idx, k)]
        if not rows:
            X = np.atleast_2d(X)
            N, D = X.shape
            return ExactResult(np.full(N, -np.inf), np.zeros((N, D)), np.zeros((N, D)), [()] * N)
        width = max(kmax, 2)
        subsets = np.zeros((len(rows), width), dtype=np.int64)
        sizes = np.zeros(len(rows), dtype=np.int64)
        ginv = np.full((len(rows), width, width), np.nan)
        G = (self.U * self.eps) @ self.U.T
        for s, A in enumerate(rows):
            A = list(A)
            subsets[s, :len(A)] = A
            sizes[s] = len(A)
            GA = G[np.ix_(A, A)]
            if np.linalg.cond(GA) < 1e10:
                ginv[s, :len(A), :len(A)] = np.linalg.inv(GA)
        return self._run(X, (subsets, sizes, ginv))


def sphere_points(dim: int, count: int, seed: int = 12345) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors in R^dim."""
    g = np.random.default_rng(seed).standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def grid_size(n: int, cap: int = 20000) -> int:
    res = int(np.ceil(40 * n))
    return int(min(res * res, cap))


def pick_starts(points: np.ndarray, values: np.ndarray, k: int, min_sep: float = 0.05) -> np.ndarray:
    """Indices of up to k high-value points, spread apart when possible."""
    order = np.argsort(-values)
    chosen: list[int] = []
    for sep in (min_sep, min_sep / 4, 0.0):
        for i in order:
            if len(chosen) == k:
                break
            if i in chosen:
                continue
            if all(np.linalg.norm(points[i] - points[j]) > sep for j in chosen):
                chosen.append(int(i))
        if len(chosen) == k:
            break
    return np.array(chosen[:k], dtype=int)


def nelder_mead(fun: Callable[[np.ndarray], float], y0: np.ndarray, step: float) -> np.ndarray:
    """Derivative-free maximization of ``fun`` from ``y0``; returns the argmax."""
    d = y0.shape[0]
    simplex = np.vstack([y0] + [y0 + step * e for e in np.eye(d)])
    res = minimize(lambda y: -fun(y), y0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-11, "fatol": 1e-14,
                            "maxiter": 4000 * d, "maxfev": 8000 * d, "adaptive": d > 2})
    return res.x


def tangent_basis(w: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the tangent space of the unit sphere at w."""
    q, _ = np.linalg.qr(np.column_stack([w, np.eye(w.shape[0])]))
    return q[:, 1:w.shape[0]].T


def sphere_exp(w: np.ndarray, basis: np.ndarray, y: np.ndarray) -> np.ndarray:
    v = y @ basis
    r = np.linalg.norm(v)
    if r < 1e-300:
        return w.copy()
    return np.cos(r) * w + np.sin(r) * v / r
