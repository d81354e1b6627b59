"""Hot loops, each in a numba flavour and a vectorized numpy flavour.

The public names at the bottom (``f_bounds``, ``active_set``, ``fan_exit``,
``ads_horizon_objective``, ``ds_horizon_objective``) resolve to the numba
versions unless ``COSMOTIME_DISABLE_NUMBA=1``. Both flavours are exported in
``NUMBA_IMPL`` / ``NUMPY_IMPL`` so tests and the benchmark can compare them.

Model codes: 0 = anti-de Sitter (form with two negatives), 1 = de Sitter.
"""

from __future__ import annotations

import numpy as np

from ._accel import backend, njit

ADS = 0
DS = 1


# ---------------------------------------------------------------------------
# f- / f+ of finitely sampled achronal data

@njit
def _f_bounds_nb(P, Qm, theta):
    N = P.shape[0]
    m = Qm.shape[0]
    fm = np.empty(N)
    fp = np.empty(N)
    for k in range(N):
        lo = -np.inf
        hi = np.inf
        for i in range(m):
            dm = 0.0
            dp = 0.0
            for j in range(P.shape[1]):
                dm += (P[k, j] - Qm[i, j]) ** 2
                dp += (P[k, j] + Qm[i, j]) ** 2
            d = 2.0 * np.arctan2(np.sqrt(dm), np.sqrt(dp))    # stable near 0 and pi
            lo = max(lo, theta[i] - d)
            hi = min(hi, theta[i] + d)
        fm[k] = lo
        fp[k] = hi
    return fm, fp


def _f_bounds_np(P, Qm, theta):
    dm = np.sqrt(np.sum((P[:, None, :] - Qm[None, :, :]) ** 2, axis=2))
    dp = np.sqrt(np.sum((P[:, None, :] + Qm[None, :, :]) ** 2, axis=2))
    d = 2.0 * np.arctan2(dm, dp)
    return np.max(theta[None, :] - d, axis=1), np.min(theta[None, :] + d, axis=1)


# ---------------------------------------------------------------------------
# exact active-set solver for the cosmological time
#
# For each subset A of null generators with invertible Gram matrix G_A, the
# component x_F of x in span(u_A) has coefficients c = G_A^{-1} <x, u_A>.
# A KKT candidate needs c >= 0, x_F timelike and future, and a unit foot
# z proportional to x - x_F that satisfies every constraint <z, u_j> <= 0.

@njit
def _active_set_nb(X, U, eps, subsets, sizes, ginv, model, tol_c, tol_f):
    N, D = X.shape
    m = U.shape[0]
    S = subsets.shape[0]
    tau = np.full(N, -np.inf)
    foot = np.zeros((N, D))
    dirn = np.zeros((N, D))
    best = np.full(N, -1, dtype=np.int64)
    EU = U * eps
    gx = np.empty(m)
    xF = np.empty(D)
    xp = np.empty(D)
    z = np.empty(D)
    for k in range(N):
        scale = 0.0
        for j in range(D):
            scale = max(scale, abs(X[k, j]))
        scale = max(scale, 1.0)
        for i in range(m):
            acc = 0.0
            for j in range(D):
                acc += EU[i, j] * X[k, j]
            gx[i] = acc
        for s in range(S):
            kk = sizes[s]
            if np.isnan(ginv[s, 0, 0]):
                continue
            ok = True
            for j in range(D):
                xF[j] = 0.0
            for a in range(kk):
                c = 0.0
                for b in range(kk):
                    c += ginv[s, a, b] * gx[subsets[s, b]]
                if c < -tol_c * scale:
                    ok = False
                    break
                for j in range(D):
                    xF[j] += c * U[subsets[s, a], j]
            if not ok:
                continue
            QF = 0.0
            Qp = 0.0
            for j in range(D):
                xp[j] = X[k, j] - xF[j]
                QF += eps[j] * xF[j] * xF[j]
                Qp += eps[j] * xp[j] * xp[j]
            if QF >= 0.0:
                continue
            sq = np.sqrt(-QF)
            if model == ADS:
                if Qp >= 0.0:
                    continue
                nrm = np.sqrt(-Qp)
                for sgn in (1.0, -1.0):
                    for j in range(D):
                        z[j] = sgn * xp[j] / nrm
                    feas = True
                    for i in range(m):
                        acc = 0.0
                        for j in range(D):
                            acc += EU[i, j] * z[j]
                        if acc > tol_f:
                            feas = False
                            break
                    if not feas:
                        continue
                    # q = x_F is future at z iff <x_F, J z> < 0
                    if xF[0] * z[1] - xF[1] * z[0] >= 0.0:
                        continue
                    a_ = np.arctan2(sq, sgn * nrm)
                    if a_ > tau[k]:
                        tau[k] = a_
                        best[k] = s
                        for j in range(D):
                            foot[k, j] = z[j]
                            dirn[k, j] = xF[j] / sq
            else:
                if Qp <= 0.0 or xF[0] <= 0.0:
                    continue
                nrm = np.sqrt(Qp)
                for j in range(D):
                    z[j] = xp[j] / nrm
                feas = True
                for i in range(m):
                    acc = 0.0
                    for j in range(D):
                        acc += EU[i, j] * z[j]
                    if acc > tol_f:
                        feas = False
                        break
                if not feas:
                    continue
                a_ = np.arccosh(max(nrm, 1.0))
                if a_ > tau[k]:
                    tau[k] = a_
                    best[k] = s
                    for j in range(D):
                        foot[k, j] = z[j]
                        dirn[k, j] = xF[j] / sq
    return tau, foot, dirn, best


def _active_set_np(X, U, eps, subsets, sizes, ginv, model, tol_c, tol_f):
    N, D = X.shape
    tau = np.full(N, -np.inf)
    foot = np.zeros((N, D))
    dirn = np.zeros((N, D))
    best = np.full(N, -1, dtype=np.int64)
    EU = U * eps
    gx = X @ EU.T
    scale = np.maximum(np.max(np.abs(X), axis=1), 1.0)
    for s in range(subsets.shape[0]):
        kk = int(sizes[s])
        if np.isnan(ginv[s, 0, 0]):
            continue
        A = subsets[s, :kk]
        c = gx[:, A] @ ginv[s, :kk, :kk].T
        good = np.all(c >= -tol_c * scale[:, None], axis=1)
        if not good.any():
            continue
        xF = c @ U[A]
        xp = X - xF
        QF = np.sum(eps * xF * xF, axis=1)
        Qp = np.sum(eps * xp * xp, axis=1)
        good &= QF < 0.0
        sq = np.sqrt(np.where(good, -QF, 1.0))
        if model == ADS:
            good &= Qp < 0.0
            nrm = np.sqrt(np.where(good, -Qp, 1.0))
            for sgn in (1.0, -1.0):
                z = sgn * xp / nrm[:, None]
                ok = good & np.all(z @ EU.T <= tol_f, axis=1)
                ok &= xF[:, 0] * z[:, 1] - xF[:, 1] * z[:, 0] < 0.0
                a_ = np.arctan2(sq, sgn * nrm)
                upd = ok & (a_ > tau)
                tau[upd] = a_[upd]
                best[upd] = s
                foot[upd] = z[upd]
                dirn[upd] = xF[upd] / sq[upd, None]
        else:
            good &= (Qp > 0.0) & (xF[:, 0] > 0.0)
            nrm = np.sqrt(np.where(good, Qp, 1.0))
            z = xp / nrm[:, None]
            ok = good & np.all(z @ EU.T <= tol_f, axis=1)
            a_ = np.arccosh(np.maximum(nrm, 1.0))
            upd = ok & (a_ > tau)
            tau[upd] = a_[upd]
            best[upd] = s
            foot[upd] = z[upd]
            dirn[upd] = xF[upd] / sq[upd, None]
    return tau, foot, dirn, best


# ---------------------------------------------------------------------------
# brute-force fan: exit length of past-directed geodesics from x

@njit
def _fan_exit_nb(x, V, U, eps, model):
    K, D = V.shape
    m = U.shape[0]
    out = np.empty(K)
    xu = np.empty(m)
    for i in range(m):
        acc = 0.0
        for j in range(D):
            acc += eps[j] * x[j] * U[i, j]
        xu[i] = acc
    for k in range(K):
        smin = np.inf
        for i in range(m):
            vu = 0.0
            for j in range(D):
                vu += eps[j] * V[k, j] * U[i, j]
            if model == ADS:
                s = np.arctan2(-xu[i], vu)
            else:
                if vu > -xu[i]:
                    s = np.arctanh(-xu[i] / vu)
                else:
                    s = np.inf
            smin = min(smin, s)
        out[k] = smin
    return out


def _fan_exit_np(x, V, U, eps, model):
    xu = (U * eps) @ x
    vu = V @ (U * eps).T
    if model == ADS:
        s = np.arctan2(-xu[None, :], vu)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = -xu[None, :] / vu
            s = np.where(vu > -xu[None, :], np.arctanh(np.clip(ratio, 0.0, 1.0)), np.inf)
    return np.min(s, axis=1)


# ---------------------------------------------------------------------------
# horizon search objectives (distance to the past horizon, penalized off I^-(x))

@njit
def _ads_obj_nb(x, tx, px, P, Qm, theta):
    N, n = P.shape
    m = Qm.shape[0]
    out = np.empty(N)
    for k in range(N):
        fm = -np.inf
        for i in range(m):
            c = 0.0
            for j in range(n):
                c += P[k, j] * Qm[i, j]
            fm = max(fm, theta[i] - np.arccos(min(1.0, max(-1.0, c))))
        c = 0.0
        for j in range(n):
            c += P[k, j] * px[j]
        dsph = np.arccos(min(1.0, max(-1.0, c)))
        dt = tx - fm
        if dt <= dsph:
            out[k] = dt - dsph
            continue
        r = 1.0 / P[k, n - 1]
        mz = x[0] * r * np.cos(fm) + x[1] * r * np.sin(fm)
        for j in range(n - 1):
            mz -= x[2 + j] * r * P[k, j]
        if -1.0 < mz < 1.0:
            out[k] = np.arccos(mz)
        else:
            out[k] = -1.0
    return out


def _ads_obj_np(x, tx, px, P, Qm, theta):
    fm = np.max(theta[None, :] - np.arccos(np.clip(P @ Qm.T, -1.0, 1.0)), axis=1)
    dsph = np.arccos(np.clip(P @ px, -1.0, 1.0))
    dt = tx - fm
    r = 1.0 / P[:, -1]
    mz = x[0] * r * np.cos(fm) + x[1] * r * np.sin(fm) - r * (P[:, :-1] @ x[2:])
    inside = (mz > -1.0) & (mz < 1.0)
    val = np.where(inside, np.arccos(np.clip(mz, -1.0, 1.0)), -1.0)
    return np.where(dt <= dsph, dt - dsph, val)


@njit
def _ds_obj_nb(x, W, Qm):
    N, n = W.shape
    m = Qm.shape[0]
    out = np.empty(N)
    for k in range(N):
        rho = np.inf
        for i in range(m):
            c = 0.0
            for j in range(n):
                c += W[k, j] * Qm[i, j]
            rho = min(rho, np.arccos(min(1.0, max(-1.0, c))))
        rho = max(rho, 1e-12)
        sr = np.sin(rho)
        z0 = np.cos(rho) / sr
        ip = -x[0] * z0
        for j in range(n):
            ip += x[1 + j] * W[k, j] / sr
        if ip > 1.0:
            if x[0] > z0:
                out[k] = np.arccosh(ip)
            else:
                out[k] = 1.0 - ip
        else:
            out[k] = ip - 1.0
    return out


def _ds_obj_np(x, W, Qm):
    rho = np.maximum(np.min(np.arccos(np.clip(W @ Qm.T, -1.0, 1.0)), axis=1), 1e-12)
    sr = np.sin(rho)
    z0 = np.cos(rho) / sr
    ip = -x[0] * z0 + (W @ x[1:]) / sr
    past = x[0] > z0
    return np.where(ip > 1.0, np.where(past, np.arccosh(np.maximum(ip, 1.0)), 1.0 - ip), ip - 1.0)


NUMBA_IMPL = {
    "f_bounds": _f_bounds_nb,
    "active_set": _active_set_nb,
    "fan_exit": _fan_exit_nb,
    "ads_horizon_objective": _ads_obj_nb,
    "ds_horizon_objective": _ds_obj_nb,
}
NUMPY_IMPL = {
    "f_bounds": _f_bounds_np,
    "active_set": _active_set_np,
    "fan_exit": _fan_exit_np,
    "ads_horizon_objective": _ads_obj_np,
    "ds_horizon_objective": _ds_obj_np,
}

_IMPL = NUMBA_IMPL if backend() == "numba" else NUMPY_IMPL

f_bounds = _IMPL["f_bounds"]
active_set = _IMPL["active_set"]
fan_exit = _IMPL["fan_exit"]
ads_horizon_objective = _IMPL["ads_horizon_objective"]
ds_horizon_objective = _IMPL["ds_horizon_objective"]


def prepare_subsets(U: np.ndarray, eps: np.ndarray, kmax: int, limit: int = 400_000):
    """Padded subset table and inverse Gram matrices for :func:`active_set`.

    Subsets have size 2..kmax. Near-singular Gram blocks get a NaN inverse and
    are skipped by the kernels.
    """
    from itertools import combinations
    from math import comb

    m = U.shape[0]
    kmax = min(kmax, m)
    total = sum(comb(m, k) for k in range(2, kmax + 1))
    if total > limit:
        raise ValueError(f"{total} active-set candidates exceed the limit {limit}")
    subsets = np.zeros((max(total, 1), max(kmax, 2)), dtype=np.int64)
    sizes = np.zeros(max(total, 1), dtype=np.int64)
    ginv = np.full((max(total, 1), max(kmax, 2), max(kmax, 2)), np.nan)
    G = (U * eps) @ U.T
    s = 0
    for k in range(2, kmax + 1):
        for A in combinations(range(m), k):
            A = list(A)
            subsets[s, :k] = A
            sizes[s] = k
            GA = G[np.ix_(A, A)]
            if np.linalg.cond(GA) < 1e10:
                ginv[s, :k, :k] = np.linalg.inv(GA)
            s += 1
    if total == 0:
        sizes[0] = 2
    return subsets, sizes, ginv
