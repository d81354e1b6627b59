"""Mean-curvature estimation on sampled spacelike hypersurfaces.

Sign convention: II(X, Y) = <nu, D_X Y> for the future unit normal nu and
H = tr(II)/(n-1). Umbilical dS leaves {<x, v> = -sinh t} measure -tanh t.

The estimator writes the surface near x as a graph s(w) over the tangent
space, ``y(w) = N(x + sum w_i e_i + s(w) nu)`` with N the radial projection
to the quadric, solves for s at a 3^(n-1)-style stencil (axis points at +-h,
diagonal points at (+-h, +-h)), fits a quadratic plus linear model, and
converts the Hessian into H. The RMS misfit of the fit flags non-smooth
points of Lipschitz level sets.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from . import ads_cosmo_time as act
from . import ds_domains as dsd
from .ads_domains import AdsDomain
from .ads_model import reflect as reflect_ads
from .ds_domains import DsBoundarySet
from .ds_domains import reflect as reflect_ds
from .errors import InsufficientDataError, InvalidInputError, RangeError
from .pseudo_linalg import inner_eps, orthonormal_complement

SLACK = 5e-3
DEFAULT_H = 1e-3
MODELS = ("ads", "ds", "ads_reverse", "ds_reverse")


def residual_cap(H: float) -> float:
    return 1e-6 * (1.0 + abs(H))


@dataclass
class SurfaceOracle:
    """Level set {value = level} inside the quadric Q = sign (-1 AdS, +1 dS).

    ``value`` maps rows of ambient points to reals and must increase toward
    the future with unit-order speed along the normal.
    """

    eps: np.ndarray
    quadric: float
    value: Callable[[np.ndarray], np.ndarray]
    level: float

    def project(self, Y: np.ndarray) -> np.ndarray:
        q = inner_eps(Y, Y, self.eps) * self.quadric
        return Y / np.sqrt(np.where(q > 0, q, np.nan))[:, None]


def _stencil(d: int, h: float) -> np.ndarray:
    offs = [np.zeros(d)]
    for i in range(d):
        for s in (1.0, -1.0):
            o = np.zeros(d)
            o[i] = s * h
            offs.append(o)
    for i, j in combinations(range(d), 2):
        for si in (1.0, -1.0):
            for sj in (1.0, -1.0):
                o = np.zeros(d)
                o[i] = si * h
                o[j] = sj * h
                offs.append(o)
    return np.array(offs)


def _heights(oracle: SurfaceOracle, base: np.ndarray, nu: np.ndarray, iters: int = 60) -> np.ndarray:
    """Secant solve of value(N(base + s nu)) = level, vectorized over rows."""

    def g(s):
        with np.errstate(invalid="ignore"):
            return oracle.value(oracle.project(base + s[:, None] * nu)) - oracle.level

    s0 = np.zeros(len(base))
    g0 = g(s0)
    s1 = -g0
    for _ in range(iters):
        g1 = g(s1)
        done = (np.abs(g1) < 1e-15) | (g1 == g0)
        if np.all(done | ~np.isfinite(g1)):
            break
        denom = np.where(done, 1.0, g1 - g0)
        s2 = np.where(done, s1, s1 - g1 * (s1 - s0) / denom)
        s0, g0, s1 = s1, g1, s2
    final = g(s1)
    return np.where(np.abs(final) < 1e-10, s1, np.nan)


def tangent_frame(x: np.ndarray, nu: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Q-orthonormal spacelike basis of the tangent space of the surface at x."""
    return orthonormal_complement([x, nu], eps, len(x) - 2)


def estimate_mean_curvature(oracle: SurfaceOracle, x, normal, h: float = DEFAULT_H) -> tuple[float, float]:
    """(H, residual) at x; H is NaN when the projection fails."""
    if not (1e-5 <= h <= 1e-2):
        raise RangeError(f"h must lie in [1e-5, 1e-2], got {h}")
    x = np.asarray(x, dtype=float)
    nu = np.asarray(normal, dtype=float)
    E = tangent_frame(x, nu, oracle.eps)
    d = E.shape[0]
    W = _stencil(d, h)
    s = _heights(oracle, x + W @ E, nu)
    if not np.all(np.isfinite(s)):
        return float("nan"), float("inf")
    names = [(i, j) for i in range(d) for j in range(i, d)]
    cols = [W[:, i] * W[:, j] * (0.5 if i == j else 1.0) for i, j in names]
    A = np.column_stack(cols + [W[:, i] for i in range(d)] + [np.ones(len(W))])
    coef, *_ = np.linalg.lstsq(A, s, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - s) ** 2)))
    K = np.zeros((d, d))
    for c, (i, j) in zip(coef, names):
        K[i, j] = K[j, i] = c
    grad = coef[len(names):len(names) + d]
    gg = 1.0 - grad @ grad
    ginv = np.eye(d) + np.outer(grad, grad) / gg
    H = -np.trace(ginv @ K) / (d * np.sqrt(gg))
    return float(H), resid


# ---------------------------------------------------------------------------
# level-set oracles


def _ads_value(dom: AdsDomain):
    def value(Y):
        t = dom.solver.solve(Y).tau
        return np.where(np.isfinite(t), t, np.nan)
    return value


def _ds_value(bs: DsBoundarySet):
    def value(Y):
        t = bs.solver.solve(Y).tau
        return np.where(np.isfinite(t), t, np.nan)
    return value


def level_oracle(domain, model: str, a: float) -> SurfaceOracle:
    """Oracle for {tau = a} (forward models) or {reverse tau = a} (reverse models)."""
    if model == "ads":
        return SurfaceOracle(domain.eps, -1.0, _ads_value(domain), a)
    if model == "ds":
        return SurfaceOracle(domain.eps, 1.0, _ds_value(domain), a)
    if model == "ads_reverse":
        fwd = _ads_value(domain.reflected())
        return SurfaceOracle(domain.eps, -1.0, lambda Y: -fwd(reflect_ads(Y)), -a)
    if model == "ds_reverse":
        fwd = _ds_value(domain)
        return SurfaceOracle(domain.eps, 1.0, lambda Y: -fwd(reflect_ds(Y)), -a)
    raise InvalidInputError(f"unknown model {model!r}")


def level_bounds(model: str, n: int, a: float) -> tuple[float, float]:
    """Two-sided mean-curvature bounds for the level a."""
    if model in ("ads", "ads_reverse"):
        lo = -1.0 / np.tan(a)
        hi = -(1.0 / (n - 1)) / np.tan(a) + (n - 2) / (n - 1) * np.tan(a)
    else:
        lo = -1.0 / np.tanh(a)
        hi = -(1.0 / (n - 1)) / np.tanh(a) - (n - 2) / (n - 1) * np.tanh(a)
    if model.endswith("reverse"):
        return -hi, -lo
    return lo, hi


def smooth_level_curvature(model: str, n: int, a: float, active_count: int) -> float:
    """H of the smooth stratum where `active_count` generators are active."""
    d = active_count - 1
    if model.startswith("ads"):
        H = (-d / np.tan(a) + (n - 1 - d) * np.tan(a)) / (n - 1)
    else:
        H = (-d / np.tanh(a) - (n - 1 - d) * np.tanh(a)) / (n - 1)
    return -H if model.endswith("reverse") else H


def _sample_level(domain, model: str, a: float, samples: int, seed: int, threads: int):
    """Level points, future normals, forward feet and active sets in the model's picture."""
    if model == "ads":
        L = act.level_sample(domain, a, samples, seed, threads)
        return L.points, L.normals, L.feet, L.active
    if model == "ds":
        L = dsd.level_sample_ds(domain, a, samples, seed, threads)
        return L.points, L.normals, L.feet, L.active
    if model == "ads_reverse":
        L = act.level_sample(domain.reflected(), a, samples, seed, threads)
        return reflect_ads(L.points), -reflect_ads(L.normals), L.feet, L.active
    if model == "ds_reverse":
        L = dsd.level_sample_ds(domain, a, samples, seed, threads)
        return reflect_ds(L.points), -reflect_ds(L.normals), L.feet, L.active
    raise InvalidInputError(f"unknown model {model!r}")


@dataclass
class CurvatureReport:
    model: str
    n: int
    a: float
    points: np.ndarray
    H: np.ndarray
    residual: np.ndarray
    accepted: np.ndarray
    active: list
    bounds: tuple
    slack: float
    violations: list = field(default_factory=list)
    barrier_checked: int = 0
    barrier_failures: list = field(default_factory=list)

    @property
    def H_min(self) -> float:
        return float(np.min(self.H[self.accepted]))

    @property
    def H_max(self) -> float:
        return float(np.max(self.H[self.accepted]))

    @property
    def accepted_fraction(self) -> float:
        return float(np.mean(self.accepted)) if len(self.accepted) else 0.0

    @property
    def passed(self) -> bool:
        return not self.violations and not self.barrier_failures


def _sphere_barrier_ok(domain, model: str, a: float, foot: np.ndarray, x_fwd: np.ndarray,
                       rng: np.random.Generator, probes: int = 12, spread: float = 1e-2) -> bool:
    """The future distance sphere of radius a around the foot stays in {tau >= a} near x."""
    eps = domain.eps
    fwd = domain.reflected() if model == "ads_reverse" else domain
    if model.startswith("ads"):
        q = (x_fwd - np.cos(a) * foot) / np.sin(a)
    else:
        q = (x_fwd - np.cosh(a) * foot) / np.sinh(a)
    S = orthonormal_complement([foot, q], eps, len(foot) - 2)
    xi = spread * rng.standard_normal((probes, S.shape[0]))
    r = np.linalg.norm(xi, axis=1)
    unit = xi / np.where(r > 0, r, 1.0)[:, None]
    W = np.cosh(r)[:, None] * q + np.sinh(r)[:, None] * (unit @ S)
    if model.startswith("ads"):
        Y = np.cos(a) * foot + np.sin(a) * W
    else:
        Y = np.cosh(a) * foot + np.sinh(a) * W
    tau = fwd.solver.solve(Y).tau
    return bool(np.all(tau >= a - 1e-9))


def verify_level_bounds(domain, model: str, a: float, samples: int, seed: int,
                        h: float = DEFAULT_H, slack: float = SLACK, threads: int = 1) -> CurvatureReport:
    """Sample the level a, measure H and check the two-sided bounds at smooth samples."""
    if model not in MODELS:
        raise InvalidInputError(f"unknown model {model!r}")
    if model.startswith("ads") and not (0.0 < a < np.pi / 2):
        raise RangeError("AdS levels must lie in (0, pi/2)")
    if model.startswith("ds") and not a > 0:
        raise RangeError("dS levels must be positive")
    n = domain.n
    X, N, feet, active = _sample_level(domain, model, a, samples, seed, threads)
    oracle = level_oracle(domain, model, a)

    def one(k):
        return estimate_mean_curvature(oracle, X[k], N[k], h)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            est = list(ex.map(one, range(len(X))))
    else:
        est = [one(k) for k in range(len(X))]
    H = np.array([e[0] for e in est]) if est else np.zeros(0)
    R = np.array([e[1] for e in est]) if est else np.zeros(0)
    acc = np.isfinite(H) & (R <= np.array([residual_cap(v) if np.isfinite(v) else 0.0 for v in H]))
    if not acc.any():
        raise InsufficientDataError(f"no accepted samples on level {a} ({len(X)} sampled)")
    lo, hi = level_bounds(model, n, a)
    viol = [int(k) for k in np.flatnonzero(acc) if not (lo - slack <= H[k] <= hi + slack)]
    rep = CurvatureReport(model, n, a, X, H, R, acc, active, (lo, hi), slack, viol)
    rng = np.random.default_rng([seed, 99])
    for k in np.flatnonzero(~acc):
        x_fwd = reflect_ads(X[k]) if model == "ads_reverse" else (reflect_ds(X[k]) if model == "ds_reverse" else X[k])
        rep.barrier_checked += 1
        if not _sphere_barrier_ok(domain, model, a, feet[k], x_fwd, rng):
            rep.barrier_failures.append(int(k))
    return rep


# ---------------------------------------------------------------------------
# barrier scan


@dataclass
class BarrierReport:
    model: str
    past_grid: list             # (a, H_min, H_max, accepted_fraction)
    future_grid: list
    past_found: bool
    future_found: bool
    alpha: float
    beta: float
    verdict: str                # global | partial | none
    non_monotone: bool
    cmc_levels: bool
    nonexistence: bool

    @property
    def label(self) -> str:
        def fmt(v):
            if np.isinf(v):
                return "-inf" if v < 0 else "+inf"
            return f"{v:.4g}"
        if self.verdict == "none":
            return "none"
        if self.verdict == "partial":
            return f"partial({fmt(self.alpha)})"
        return f"{self.verdict}({fmt(self.alpha)},{fmt(self.beta)})"

    def as_dict(self) -> dict:
        def num(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {
            "model": self.model,
            "cmc_time_verdict": self.verdict,
            "label": self.label,
            "alpha": "-inf" if self.alpha == -np.inf else num(self.alpha),
            "beta": "+inf" if self.beta == np.inf else num(self.beta),
            "past_barrier_sequence": self.past_found,
            "future_barrier_sequence": self.future_found,
            "non_monotone": self.non_monotone,
            "cmc_levels": self.cmc_levels,
            "cmc_time_nonexistence": self.nonexistence,
            "past_grid": [list(map(float, r)) for r in self.past_grid],
            "future_grid": [list(map(float, r)) for r in self.future_grid],
        }


def _limit(values: list[float]) -> float:
    """Aitken extrapolation of the last three terms, falling back to the last term."""
    if len(values) >= 3:
        x0, x1, x2 = values[-3:]
        den = x2 - 2 * x1 + x0
        if abs(den) > 1e-12 and abs(x2 - x1) > 1e-12:
            lim = x2 - (x2 - x1) ** 2 / den
            if abs(lim - x2) <= abs(x2 - x1) * 10:
                return float(lim)
    return float(values[-1])


def barrier_scan(domain, model: str, a_list, b_list, samples: int = 12, seed: int = 0,
                 h: float = DEFAULT_H, slack: float = SLACK, threads: int = 1) -> BarrierReport:
    """Probe level sets near both ends and turn the envelopes into a CMC-time verdict.

    ``model`` is 'ads' or 'ds'. Past probes are levels a -> 0. Future probes
    are levels b -> infinity in dS, and reverse-time levels b -> 0 in AdS.
    """
    if model not in ("ads", "ds"):
        raise InvalidInputError("barrier_scan model must be 'ads' or 'ds'")
    n = domain.n
    a_sorted = sorted(a_list, reverse=True)
    if model == "ads":
        b_sorted, fmodel = sorted(b_list, reverse=True), "ads_reverse"
    else:
        b_sorted, fmodel = sorted(b_list), "ds"

    def probe(m, a):
        try:
            r = verify_level_bounds(domain, m, a, samples, seed, h, slack, threads)
            return (a, r.H_min, r.H_max, r.accepted_fraction)
        except InsufficientDataError:
            return None

    past = [p for p in (probe(model, a) for a in a_sorted) if p is not None]
    future = [p for p in (probe(fmodel, b) for b in b_sorted) if p is not None]

    # past: upper envelope diverging like -1/((n-1) a) certifies alpha = -inf
    past_found, alpha = False, np.nan
    if len(past) >= 2:
        hi = [p[2] for p in past]
        decreasing = all(h2 <= h1 + slack for h1, h2 in zip(hi, hi[1:]))
        if decreasing and past[-1][0] * hi[-1] <= -(1.0 - 0.05) / (n - 1):
            past_found, alpha = True, -np.inf
        elif decreasing:
            past_found, alpha = True, _limit(hi)

    future_found, beta = False, np.nan
    if len(future) >= 2:
        lo = [p[1] for p in future]
        hi = [p[2] for p in future]
        if model == "ads":
            increasing = all(l2 >= l1 - slack for l1, l2 in zip(lo, lo[1:]))
            if increasing and future[-1][0] * lo[-1] >= (1.0 - 0.05) / (n - 1):
                future_found, beta = True, np.inf
        else:
            beta = _limit(lo)
            approach = all(l2 >= l1 - slack for l1, l2 in zip(lo, lo[1:]))
            below = all(v <= beta + slack for v in hi)
            future_found = approach and below

    if model == "ds" and future_found and not beta <= -1.0 + slack:
        future_found = False

    if past_found and future_found:
        verdict = "global"
    elif past_found:
        verdict = "partial"
    else:
        verdict = "none"

    ordered = sorted(past, key=lambda p: p[0]) + (sorted(future, key=lambda p: p[0]) if model == "ds" else [])
    cmc = all(p[2] - p[1] <= slack for p in ordered)
    mids = [0.5 * (p[1] + p[2]) for p in ordered]
    diffs = np.diff(mids)
    non_monotone = bool(len(diffs) > 1 and np.any(diffs > slack) and np.any(diffs < -slack))
    return BarrierReport(model, past, future, past_found, future_found,
                         alpha if past_found else np.nan, beta if future_found else np.nan,
                         verdict, non_monotone, cmc, bool(cmc and non_monotone))


def leaf_oracle(leaf) -> SurfaceOracle:
    return SurfaceOracle(leaf.eps, 1.0, leaf.value, leaf.level)


def distance_sphere_oracle(center: np.ndarray, a: float) -> SurfaceOracle:
    """Future distance sphere of radius a around a dS point."""
    c = np.asarray(center, dtype=float)
    eps = dsd.ds_eps(len(c) - 1)

    def value(Y):
        ip = inner_eps(Y, c, eps)
        return np.arccosh(np.where(ip >= 1.0, ip, np.nan))
    return SurfaceOracle(eps, 1.0, value, a)


def convergence_ratio(oracle: SurfaceOracle, x, normal, exact: float,
                      h_coarse: float = 2e-3, h_fine: float = 1e-3) -> tuple[float, float, float]:
    """(error at h_coarse, error at h_fine, ratio)."""
    e1 = abs(estimate_mean_curvature(oracle, x, normal, h_coarse)[0] - exact)
    e2 = abs(estimate_mean_curvature(oracle, x, normal, h_fine)[0] - exact)
    return e1, e2, (e1 / e2 if e2 > 0 else np.inf)

