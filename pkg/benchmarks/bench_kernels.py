"""Time each hot kernel in its numba and numpy flavours on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Numba timings exclude the first (compiling) call. Run with
COSMOTIME_DISABLE_NUMBA=1 to confirm the library falls back cleanly; the
comparison itself always calls both flavours directly.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from timeit import default_timer as timer

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from corpus import random_ads_domain, random_ds_set  # noqa: E402
from cosmotime import ads_cosmo_time as act  # noqa: E402
from cosmotime import kernels  # noqa: E402
from cosmotime._accel import backend  # noqa: E402
from cosmotime._solver import sphere_points  # noqa: E402
from cosmotime.ads_model import conformal_batch  # noqa: E402


def cases(seed: int = 0):
    rng = np.random.default_rng(seed)
    dom = random_ads_domain(rng, 4)
    while len(dom.data.theta) < 6:
        dom = random_ads_domain(rng, 4)
    bs = random_ds_set(rng, 4)
    th = np.ascontiguousarray(dom.data.theta)

    P = rng.standard_normal((20000, dom.n))
    P[:, -1] = np.abs(P[:, -1])
    P = np.ascontiguousarray(P / np.linalg.norm(P, axis=1, keepdims=True))
    yield "f_bounds", (P, dom._marks, th)

    X = np.ascontiguousarray(dom.sample_interior(400, rng))
    S = dom.solver
    yield "active_set", (X, S.U, S.eps, *S.table, kernels.ADS, 1e-9, 1e-9)

    x = X[0]
    tx = float(dom.unrolled_time(x[None, :])[0])
    px = np.ascontiguousarray(conformal_batch(x[None, :])[1][0])
    yield "ads_horizon_objective", (x, tx, px, act._grid(dom), dom._marks, th)

    y = bs.sample_interior(1, rng)[0]
    yield "ds_horizon_objective", (y, sphere_points(bs.n, 20000, seed=1), np.ascontiguousarray(bs.marks))

    T, Sp = act._tangent_frame(x, dom.eps)
    xi = 3.0 * rng.standard_normal((20000, Sp.shape[0]))
    yield "fan_exit", (x, np.ascontiguousarray(act._directions(T, Sp, xi)), dom.U, dom.eps, kernels.ADS)


def best_of(fn, args, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = timer()
        fn(*args)
        times.append(timer() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="write timings to this file")
    args = ap.parse_args(argv)

    rows = []
    print(f"library backend: {backend()}")
    if backend() != "numba":
        print("numba disabled: the first column times the same loops as plain Python")
    print(f"{'kernel':<24}{'loops [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, a in cases():
        nb, npy = kernels.NUMBA_IMPL[name], kernels.NUMPY_IMPL[name]
        nb(*a)  # compile
        t_nb = best_of(nb, a, args.repeat)
        t_np = best_of(npy, a, args.repeat)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb})
        print(f"{name:<24}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>9.1f}x")
    if args.json:
        Path(args.json).write_text(json.dumps({"backend": backend(), "results": rows}, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
