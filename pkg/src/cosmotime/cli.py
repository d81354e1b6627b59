"""Scenario runner: ``cosmotime run scenario.json [--threads N] [--out DIR] [--verbose]``.

Exit codes: 0 when every task passes, 1 on input errors, 2 on bound or
verdict failures and numerical breakdowns.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from . import ads_cosmo_time as act
from . import ds_domains as dsd
from .ads_domains import AchronalData, AdsDomain
from .ads_model import conformal_batch
from .ads_model import reflect as reflect_ads
from .curvature_meter import barrier_scan, level_bounds, verify_level_bounds
from .ds_domains import DsBoundarySet
from .ds_foliations import FoliationCurve, counterexample_peak, counterexample_profile, validate_foliation
from .errors import CosmotimeError, InsufficientDataError, InvalidInputError, RangeError, DomainError
from .gauss_flow import almost_fuchsian_check, umbilical_patch, weingarten_evolution

log = logging.getLogger("cosmotime")

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class ScenarioError(Exception):
    """Input problem reported with a location inside the scenario file."""


def load_schema() -> dict:
    return json.loads(resources.files("cosmotime").joinpath("scenario.schema.json").read_text())


def _locate(text: str, path) -> int | None:
    """Best-effort line number of a JSON path inside the source text."""
    pos, line = 0, None
    for key in path:
        if isinstance(key, str):
            hit = text.find(f'"{key}"', pos)
            if hit < 0:
                break
            pos = hit
            line = text.count("\n", 0, hit) + 1
        else:
            # skip to the key-th element of the array that starts after pos
            start = text.find("[", pos)
            if start < 0:
                break
            depth, idx, i = 0, 0, start
            while i < len(text):
                ch = text[i]
                if ch in "[{":
                    depth += 1
                    if depth == 2 and idx == key:
                        break
                elif ch in "]}":
                    depth -= 1
                    if depth == 0:
                        break
                elif ch == "," and depth == 1:
                    idx += 1
                    if idx == key:
                        i += 1
                        while i < len(text) and text[i] in " \t\r\n":
                            i += 1
                        break
                i += 1
            pos = i
            line = text.count("\n", 0, i) + 1
    return line


def _field(path) -> str:
    out = ""
    for key in path:
        out += f"[{key}]" if isinstance(key, int) else (f".{key}" if out else key)
    return out or "<root>"


def parse_scenario(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for err in errors:
            loc = _locate(text, list(err.absolute_path))
            where = f"{path}:{loc}" if loc else path
            lines.append(f"{where}: field {_field(err.absolute_path)}: {err.message}")
        raise ScenarioError("\n".join(lines))
    return doc


def build_domain(desc: dict | None):
    if desc is None:
        return None
    n = desc["n"]
    try:
        if desc["model"] == "ads":
            pts = desc["points"]
            for k, p in enumerate(pts):
                if len(p["p"]) != n - 1:
                    raise ScenarioError(f"field domain.points[{k}].p: expected {n - 1} coordinates for n = {n}")
            return AdsDomain(AchronalData.from_pairs((p["p"], p["theta"]) for p in pts))
        for k, m in enumerate(desc["marks"]):
            if len(m) != n:
                raise ScenarioError(f"field domain.marks[{k}]: expected {n} coordinates for n = {n}")
        return DsBoundarySet(np.array(desc["marks"], dtype=float))
    except (InvalidInputError, DomainError) as exc:
        raise ScenarioError(f"field domain: {exc}") from exc


# ---------------------------------------------------------------------------
# artifacts


@dataclass
class TaskResult:
    name: str
    passed: bool
    detail: str
    files: list = field(default_factory=list)
    seconds: float = 0.0


class Writer:
    def __init__(self, directory: str, prefix: str, scenario: str, seed: int):
        self.directory = directory
        self.prefix = prefix
        self.scenario = scenario
        self.seed = seed
        os.makedirs(directory, exist_ok=True)

    def _path(self, index: int, task: str, ext: str) -> str:
        return os.path.join(self.directory, f"{self.prefix}_{index:02d}_{task}.{ext}")

    def csv(self, index: int, task: str, header: list, rows) -> str:
        path = self._path(index, task, "csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"#scenario: {self.scenario}\n#seed: {self.seed}\n#version: {__version__}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return path

    def json(self, index: int, task: str, payload: dict) -> str:
        path = self._path(index, task, "json")
        body = {"scenario": self.scenario, "seed": self.seed, "version": __version__, **payload}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return v


# ---------------------------------------------------------------------------
# tasks


def _need(domain, task: str, index: int):
    if domain is None:
        raise ScenarioError(f"field tasks[{index}]: task {task!r} needs a domain")
    return domain


def _model(domain) -> str:
    return "ads" if isinstance(domain, AdsDomain) else "ds"


def task_tau_profile(cfg, domain, ctx):
    dom = _need(domain, "tau_profile", ctx.index)
    count = cfg.get("count", 50)
    method = cfg.get("method", "search")
    reverse = cfg.get("reverse", False)
    rng = np.random.default_rng([ctx.seed, ctx.index])
    model = _model(dom)
    if model == "ads":
        X = dom.sample_interior(4 * count, rng)
        X = X[dom.contains_regular_batch(X)][:count]
        if reverse:
            X = X[dom.reflected().contains_regular_batch(reflect_ads(X))]
            fn = act.reverse_cosmological_time
        else:
            fn = act.cosmological_time
    else:
        X = dom.sample_interior(count, rng)
        if reverse:
            # the reverse time lives on the time-reflected domain
            X = dsd.reflect(X)
            fn = dsd.reverse_cosmological_time_ds
        else:
            fn = dsd.cosmological_time_ds

    def one(x):
        return fn(dom, x, method=method)

    tau = np.array(ctx.map(one, list(X)))
    if model == "ads":
        t, P = conformal_batch(X)
        header = ["t"] + [f"p{i + 1}" for i in range(P.shape[1])] + ["tau"]
        rows = [[ti, *pi, ta] for ti, pi, ta in zip(t, P, tau)]
        ok = bool(np.all(np.isfinite(tau)) and np.all((tau > 0) & (tau < np.pi / 2)))
    else:
        header = [f"x{i}" for i in range(X.shape[1])] + ["tau"]
        rows = [[*x, ta] for x, ta in zip(X, tau)]
        ok = bool(np.all(np.isfinite(tau)) and np.all(tau > 0))
    if len(rows) == 0:
        raise InsufficientDataError("no regular points sampled")
    f = ctx.writer.csv(ctx.index, "tau_profile", header, rows)
    return ok, f"{len(rows)} points, tau in [{tau.min():.4g}, {tau.max():.4g}]", [f]


def task_level_curvature(cfg, domain, ctx):
    dom = _need(domain, "level_curvature", ctx.index)
    model = _model(dom) + ("_reverse" if cfg.get("reverse", False) else "")
    samples = cfg.get("samples", 20)
    h = cfg.get("h", 1e-3)
    slack = cfg.get("slack", 5e-3)
    rows, ok, bad = [], True, []
    for a in cfg["a_list"]:
        rep = verify_level_bounds(dom, model, a, samples, ctx.seed, h, slack, ctx.threads)
        lo, hi = level_bounds(model, dom.n, a)
        rows.append([a, rep.H_min, rep.H_max, rep.accepted_fraction, lo, hi, len(rep.violations),
                     rep.passed])
        if not rep.passed:
            ok = False
            bad.append(a)
    f = ctx.writer.csv(ctx.index, "level_curvature",
                       ["a", "H_min", "H_max", "accepted_fraction", "lower_bound", "upper_bound",
                        "violations", "passed"], rows)
    detail = f"{len(rows)} levels, " + ("all within bounds" if ok else f"violations at a = {bad}")
    return ok, detail, [f]


def task_barrier_scan(cfg, domain, ctx):
    dom = _need(domain, "barrier_scan", ctx.index)
    model = _model(dom)
    if model == "ads":
        a_list = cfg.get("a_list", [0.4, 0.2, 0.1, 0.05])
        b_list = cfg.get("b_list", [0.4, 0.2, 0.1, 0.05])
    else:
        a_list = cfg.get("a_list", [0.4, 0.2, 0.1, 0.05])
        b_list = cfg.get("b_list", [1.0, 2.0, 3.0, 4.0])
    if model == "ads" and any(v >= np.pi / 2 for v in list(a_list) + list(b_list)):
        raise ScenarioError(f"field tasks[{ctx.index}]: AdS probe levels must lie in (0, pi/2)")
    rep = barrier_scan(dom, model, a_list, b_list, cfg.get("samples", 8), ctx.seed,
                       cfg.get("h", 1e-3), threads=ctx.threads)
    rows = [["past", *r] for r in rep.past_grid] + [["future", *r] for r in rep.future_grid]
    f1 = ctx.writer.csv(ctx.index, "barrier_scan",
                        ["side", "a", "H_min", "H_max", "accepted_fraction"], rows)
    f2 = ctx.writer.json(ctx.index, "barrier_scan", rep.as_dict())
    expect = cfg.get("expect")
    ok = expect is None or rep.verdict == expect
    flags = [k for k, v in (("non-monotone", rep.non_monotone),
                            ("cmc-time nonexistence", rep.nonexistence)) if v]
    detail = rep.label + (f" [{', '.join(flags)}]" if flags else "")
    if not ok:
        detail += f" (expected {expect})"
    return ok, detail, [f1, f2]


def task_foliation_check(cfg, domain, ctx):
    try:
        curve = FoliationCurve.from_samples((c["t"], c["v"]) for c in cfg["curve"])
    except InvalidInputError as exc:
        raise ScenarioError(f"field tasks[{ctx.index}].curve: {exc}") from exc
    verdict = validate_foliation(curve, cfg.get("samples", 2000), ctx.seed, ctx.threads)
    speeds = curve.speeds()
    rows = [[i, curve.t[i], curve.t[i + 1], s, bool(s < 1.0)] for i, s in enumerate(speeds)]
    f1 = ctx.writer.csv(ctx.index, "foliation_check", ["step", "t0", "t1", "speed", "timelike"], rows)
    f2 = ctx.writer.json(ctx.index, "foliation_check", {
        "verdict": str(verdict), "status": verdict.status, "index": verdict.index,
        "pair": list(verdict.pair) if verdict.pair else None,
        "marginal": verdict.marginal, "agree": verdict.agree,
    })
    expect = cfg.get("expect", "ok")
    ok = verdict.status == expect and (verdict.agree or verdict.marginal)
    detail = str(verdict) + ("" if verdict.agree else " (brute force disagrees)")
    return ok, detail, [f1, f2]


def task_gauss_flow(cfg, domain, ctx):
    n = cfg.get("n", domain.n if domain is not None else 3)
    radius = cfg.get("radius", 1.0)
    count = cfg.get("count", 16)
    t_list = sorted(cfg["t_list"])
    center = np.zeros(n + 1)
    center[1] = 1.0
    patch = umbilical_patch(center, radius, count, ctx.seed)
    af = almost_fuchsian_check(patch)
    rows, ok = [], bool(af)
    prev = -np.inf
    for t in t_list:
        Ht = patch.flowed(t).mean_curvature()
        kmax = max(float(np.linalg.eigvalsh(B).max())
                   for B in (weingarten_evolution(B0, t) for B0 in patch.shape))
        rows.append([t, Ht.min(), Ht.max(), kmax])
        if not (Ht.max() < -1.0 and Ht.min() >= prev - 1e-12):
            ok = False
        prev = Ht.max()
    # semigroup check on a non-umbilical perturbation of the first shape operator
    B0 = patch.shape[0] + 0.05 * (np.ones_like(patch.shape[0]) - np.eye(n - 1))
    s1, s2 = 0.3, 0.5
    semi = float(np.max(np.abs(weingarten_evolution(weingarten_evolution(B0, s1), s2)
                               - weingarten_evolution(B0, s1 + s2))))
    ok = ok and semi <= 1e-8
    f = ctx.writer.csv(ctx.index, "gauss_flow", ["t", "H_min", "H_max", "kappa_max"], rows)
    detail = f"almost-fuchsian {af}, H(t_max) = {rows[-1][2]:.9g}, semigroup defect {semi:.1e}"
    return ok, detail, [f]


def task_counterexample(cfg, domain, ctx):
    n = cfg["n"]
    samples = cfg.get("samples", 4)
    prof = counterexample_profile(n, cfg["a_grid"])
    rows, ok = [], True
    bs = None
    if samples > 0:
        marks = np.zeros((2, n))
        marks[0, 0], marks[1, 0] = 1.0, -1.0
        bs = DsBoundarySet(marks)
    for a, H in prof:
        row = [a, H]
        if bs is not None:
            rep = verify_level_bounds(bs, "ds", a, samples, ctx.seed, threads=ctx.threads)
            err = max(abs(rep.H_min - H), abs(rep.H_max - H))
            row += [rep.H_min, rep.H_max, err]
            ok = ok and err <= 1e-3
        rows.append(row)
    header = ["a", "H"] + (["H_min_measured", "H_max_measured", "abs_error"] if bs is not None else [])
    f = ctx.writer.csv(ctx.index, "counterexample", header, rows)
    if n == 3:
        ok = ok and prof.monotone
    elif min(prof.a) < counterexample_peak(n)[0] < max(prof.a):
        ok = ok and not prof.monotone
    H = np.asarray(prof.H)
    detail = f"n = {n}, {'monotone' if prof.monotone else 'non-monotone'}, max H = {H.max():.6g}"
    return ok, detail, [f]


TASKS = {
    "tau_profile": task_tau_profile,
    "level_curvature": task_level_curvature,
    "barrier_scan": task_barrier_scan,
    "foliation_check": task_foliation_check,
    "gauss_flow": task_gauss_flow,
    "counterexample": task_counterexample,
}


@dataclass
class Context:
    index: int
    seed: int
    threads: int
    writer: Writer

    def map(self, fn, items):
        if self.threads > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(self.threads) as ex:
                return list(ex.map(fn, items))
        return [fn(x) for x in items]


def run_scenario(path: str, threads: int = 1, out: str | None = None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        doc = parse_scenario(path)
        domain = build_domain(doc.get("domain"))
    except ScenarioError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    seed = doc["seed"]
    prefix = doc.get("output") or os.path.splitext(os.path.basename(path))[0]
    directory = out if out is not None else (os.path.dirname(prefix) or ".")
    writer = Writer(directory, os.path.basename(prefix), os.path.basename(path), seed)
    results: list[TaskResult] = []
    code = EXIT_OK
    for index, cfg in enumerate(doc["tasks"]):
        name = cfg["task"]
        ctx = Context(index, seed, max(1, threads), writer)
        log.info("task %d: %s", index, name)
        t0 = time.perf_counter()
        try:
            passed, detail, files = TASKS[name](cfg, domain, ctx)
        except ScenarioError as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        except (RangeError, InvalidInputError, DomainError) as exc:
            print(f"input error: field tasks[{index}] ({name}): {exc}", file=sys.stderr)
            return EXIT_INPUT
        except (CosmotimeError, ArithmeticError) as exc:
            passed, detail, files = False, f"{type(exc).__name__}: {exc}", []
            print(f"task {name} failed: {detail}", file=sys.stderr)
        res = TaskResult(name, passed, detail, files, time.perf_counter() - t0)
        log.debug("task %d done in %.2fs", index, res.seconds)
        results.append(res)
        if not passed:
            code = EXIT_FAIL
    _summary(results, stream)
    return code


def _summary(results: list[TaskResult], stream):
    w = max(len(r.name) for r in results)
    print(f"{'#':>2}  {'task':<{w}}  {'status':<6}  detail", file=stream)
    for i, r in enumerate(results):
        print(f"{i:>2}  {r.name:<{w}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}", file=stream)
    for r in results:
        for f in r.files:
            print(f"wrote {f}", file=stream)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosmotime", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="path to the scenario JSON")
    run.add_argument("--threads", type=int, default=1, help="sample-parallel worker threads")
    run.add_argument("--out", default=None, help="directory for CSV/JSON artifacts")
    run.add_argument("--verbose", action="store_true", help="log task progress")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("input error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    return run_scenario(args.scenario, args.threads, args.out)


if __name__ == "__main__":
    sys.exit(main())
