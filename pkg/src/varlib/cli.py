"""Command-line front end: ``varlib <subcommand> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for bad input.
Reports are sorted-key JSON and contain no wall-clock data unless ``--timings`` is given.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from typing import Callable

import numpy as np

from . import __version__
from .funcmodel import GridSample, RademacherPrimitive, from_json as model_from_json
from .intervals import Interval, PreconditionError

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Unreadable or malformed input."""


class Run:
    """Collects inputs, outputs and checks; files are only written once the command succeeds."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: dict = {}
        self.checks: dict[str, bool] = {}
        self.files: list[tuple[str, str]] = []
        self.t0 = time.perf_counter()
        self.stages: dict[str, float] = {}

    def read(self, path: str, label: str) -> str:
        try:
            if path == "-":
                data = sys.stdin.buffer.read()
            else:
                with open(path, "rb") as fh:
                    data = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {label} {path!r}: {exc}") from exc
        self.inputs[label] = hashlib.sha256(data).hexdigest()
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InputError(f"{label} is not UTF-8: {exc}") from exc

    def read_json(self, path: str, label: str):
        text = self.read(path, label)
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{label} is not valid JSON: {exc}") from exc

    def emit(self, path: str | None, text: str) -> None:
        if path:
            self.files.append((path, text))

    def stage(self, name: str) -> None:
        self.stages[name] = time.perf_counter() - self.t0

    def report(self) -> dict:
        rep = {"command": self.command, "tool_version": __version__, "seed": self.args.seed,
               "inputs": dict(sorted(self.inputs.items())), "outputs": self.outputs,
               "checks": dict(sorted(self.checks.items())), "passed": all(self.checks.values())}
        if getattr(self.args, "timings", False):
            rep["timings"] = {**self.stages, "total": time.perf_counter() - self.t0}
        return rep


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Input helpers


def _load_model(run: Run, args) -> object:
    if getattr(args, "samples_csv", None):
        return GridSample.from_csv(run.read(args.samples_csv, "samples_csv"))
    path = args.model_json or "-"
    return model_from_json(run.read_json(path, "model_json"))


def _parse_xs(spec: str | None, f) -> np.ndarray | None:
    if spec is None:
        return None
    from .varnorm import dyadic_grid

    if spec.startswith("dyadic:"):
        return dyadic_grid(int(spec.split(":", 1)[1]))
    try:
        return np.array([float(x) for x in spec.split(",")])
    except ValueError as exc:
        raise PreconditionError(f"bad --xs value {spec!r}") from exc


def parse_eps(spec: str, length: int) -> list[float]:
    """'2^-i' (i = 1..length), any expression in i, or a comma list."""
    from .varmeasure import eval_power

    spec = spec.strip()
    if "," in spec:
        vals = [eval_power(x) for x in spec.split(",")]
    elif "i" in spec:
        vals = []
        for i in range(1, length + 1):
            expr = spec.replace("i", str(i)).replace("^", "**")
            if any(c not in "0123456789.+-*/() e" for c in expr):
                raise PreconditionError(f"unsupported epsilon expression {spec!r}")
            vals.append(float(eval(expr, {"__builtins__": {}}, {})))  # noqa: S307 - filtered arithmetic
    else:
        vals = [eval_power(spec)] * length
    if len(vals) < length or any(v <= 0 for v in vals):
        raise PreconditionError("need a positive epsilon for every selected position")
    return vals


# ---------------------------------------------------------------------------
# Subcommands


def cmd_varnorm(run: Run, args) -> None:
    from .varnorm import mesh_constrained_var, v2_norm

    f = _load_model(run, args)
    if args.delta is None:
        res = v2_norm(f, method=args.method, p=args.p)
        run.outputs = {"value": res.norm if args.p == 2.0 else res.value ** (1 / args.p),
                       "value_sq": res.value, "witness": [list(w) for w in res.witness],
                       "method": res.method}
    else:
        step = args.grid_step if args.grid_step is not None else args.delta / 4.0
        n = int(math.ceil(1.0 / step))
        grid = np.unique(np.concatenate([np.arange(n + 1) / n, f.breakpoints()]))
        res = mesh_constrained_var(f, Interval(0.0, 1.0), args.delta, grid, p=args.p)
        run.outputs = {"value": res.value, "delta": args.delta, "grid_step": 1.0 / n,
                       "witness": [list(w) for w in res.witness], "method": res.method}


def cmd_measure_est(run: Run, args) -> None:
    from .varmeasure import DEFAULT_LADDER, dist_bounds, estimate_cdf, parse_ladder

    f = _load_model(run, args)
    ladder = parse_ladder(args.ladder) if args.ladder else DEFAULT_LADDER
    est = estimate_cdf(f, _parse_xs(args.xs, f), ladder, args.grid_step, args.tol)
    bounds = dist_bounds(f, est)
    run.outputs = {"estimate": est.to_json(), "dist_bounds": bounds.to_json()}
    if args.plot_data:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "delta", "value"])
        for row in est.plot_rows():
            w.writerow([repr(v) for v in row])
        run.emit(args.plot_data, buf.getvalue())


def cmd_synthesize(run: Run, args) -> None:
    from .synthesis import synthesize
    from .varmeasure import MeasureSpec

    target = MeasureSpec.from_json(run.read_json(args.measure_json, "measure_json"))
    out = synthesize(target, args.levels, max_level=args.max_level, selection=args.selection,
                     gap=args.gap)
    run.stage("synthesis")
    run.outputs = out.to_json()
    run.checks["complete"] = out.complete
    run.emit(args.out, dumps(out.f.to_json()))


def cmd_rademacher(run: Run, args) -> None:
    from .synthesis import rademacher_sum

    try:
        idx = [int(x) for x in args.indices.split(",") if x.strip()]
    except ValueError as exc:
        raise PreconditionError(f"bad --indices {args.indices!r}") from exc
    f = rademacher_sum(idx)
    run.outputs = {"indices": idx}
    if len(idx) == 1:
        run.outputs["v2_norm"] = RademacherPrimitive(idx[0]).v2_norm_closed_form()
    run.emit(args.out, dumps(f.to_json()))


def cmd_biortho(run: Run, args) -> None:
    from .biorthogonal import SelectionCertificate, check_biortho, select_subsequence

    if args.action == "select":
        if not os.path.isdir(args.candidates):
            raise InputError(f"candidate directory {args.candidates!r} not found")
        names = sorted(n for n in os.listdir(args.candidates) if n.endswith(".json"))
        if not names:
            raise InputError("candidate directory holds no .json models")
        pool = [model_from_json(run.read_json(os.path.join(args.candidates, n), f"candidate:{n}"))
                for n in names]
        eps = parse_eps(args.eps, args.len)
        cert = select_subsequence(pool, eps, args.len, mode=args.mode,
                                  labels=[os.path.splitext(n)[0] for n in names])
        run.outputs = cert.to_json()
        run.checks["complete"] = cert.complete
        run.emit(args.cert, dumps(cert.to_json()))
    else:
        cert = SelectionCertificate.from_json(run.read_json(args.cert, "cert"))
        fam = cert.family()
        rec = cert.recheck()
        run.outputs = {"recheck": rec, "indices": cert.indices, "labels": cert.labels}
        run.checks.update(rec)
        if len(fam) >= 1:
            k = len(fam)
            wit = check_biortho(fam, list(cert.epsilons[:k]), cert.ladder(), grid_level=args.grid_level)
            run.outputs["biortho"] = wit.to_json()
            run.checks["biorthogonal"] = wit.passed
        run.checks["complete"] = cert.complete


def cmd_tree_norm(run: Run, args) -> None:
    from .dyadictree import TreeVector, sp_norm

    x = TreeVector.from_json(run.read_json(args.vector_json, "vector_json"))
    val, wit = sp_norm(x, args.p)
    run.outputs = {"value": val, "witness": wit, "p": args.p}


def cmd_lus2(run: Run, args) -> None:
    from .dyadictree import TreeVector, is_maximal_antichain, lus2_decompose, max_depth

    if args.depth > max_depth():
        raise PreconditionError(f"depth {args.depth} exceeds the cap {max_depth()}")
    a = TreeVector.from_json(run.read_json(args.alpha, "alpha"))
    l = TreeVector.from_json(run.read_json(args.lam, "lambda"))
    res = lus2_decompose(a, l, args.depth)
    run.outputs = res.to_json()
    run.checks["inequality"] = res.holds
    run.checks["maximal"] = is_maximal_antichain(res.antichain, args.depth)


def cmd_system(run: Run, args) -> None:
    from .dyadictree import SystemBundle, gen1_transform, rademacher_generating_bundle, validate_system

    if args.action == "example":
        b = rademacher_generating_bundle(args.depth, args.level)
        run.outputs = {"depth": b.depth, "nodes": len(b.G)}
        run.emit(os.path.join(args.out, "bundle.json"), dumps(b.to_json()))
        return
    path = os.path.join(args.bundle, "bundle.json") if os.path.isdir(args.bundle) else args.bundle
    bundle = SystemBundle.from_json(run.read_json(path, "bundle"))
    if args.action == "validate":
        rep = validate_system(bundle, args.kind, seed=args.seed)
        run.outputs = rep.to_json()
        run.checks[f"valid_{args.kind}"] = rep.passed
    else:
        tr = gen1_transform(bundle)
        run.outputs = {"transform": tr.to_json()}
        if args.validate:
            rep = validate_system(tr.bundle, "s2", seed=args.seed)
            run.outputs["validation"] = rep.to_json()
            run.checks["valid_s2"] = rep.passed
        run.emit(os.path.join(args.out, "bundle.json"), dumps(tr.bundle.to_json()))


def cmd_equiv_const(run: Run, args) -> None:
    from .biorthogonal import SelectionCertificate
    from .dyadictree import (SystemBundle, coefficient_samples, equivalence_constants,
                             gen1_transform)
    from .varnorm import v2_norm_value

    rng = np.random.default_rng(args.seed)
    if args.target == "s2":
        if not args.bundle:
            raise InputError("--bundle is required for the s2 target")
        path = os.path.join(args.bundle, "bundle.json") if os.path.isdir(args.bundle) else args.bundle
        bundle = SystemBundle.from_json(run.read_json(path, "bundle"))
        eps = bundle.eps_total
        if args.transform:
            tr = gen1_transform(bundle)
            bundle, eps = tr.bundle, tr.eps
        fam = bundle.G
        constants = {"M": bundle.M, "Lambda": bundle.Lam, "theta": bundle.theta, "eps": eps,
                     "eps_hat": float(sum(bundle.eps))}
    else:
        if not args.cert:
            raise InputError("--cert is required for the c0 target")
        cert = SelectionCertificate.from_json(run.read_json(args.cert, "cert"))
        members = cert.family()
        fam = {str(i): H for i, H in enumerate(members)}
        M = max(v2_norm_value(H) for H in members)
        constants = {"C": args.C, "mu_norm": args.mu_norm, "M": M,
                     "eps": float(sum(cert.epsilons[:len(members)]))}
    samples = coefficient_samples(list(fam), args.samples, rng, args.target)
    rep = equivalence_constants(fam, args.target, samples, constants, tol=args.tol, jobs=args.jobs)
    run.outputs = {"equivalence": rep.to_json(), "constants": constants}
    run.checks["consistent"] = bool(rep.consistent)


def cmd_selftest(run: Run, args) -> None:
    from .selftest import run_selftest

    results = run_selftest()
    run.outputs = {"examples": results}
    run.checks = {name: r["ok"] for name, r in results.items()}


# ---------------------------------------------------------------------------
# Parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for every randomised estimator")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent evaluations")
    p.add_argument("--report", default=None, help="report path ('-' for stdout)")
    p.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varlib", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def model_args(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--model-json", default=None, help="model JSON ('-' or omitted: stdin)")
        g.add_argument("--samples-csv", default=None, help="CSV with header t,value")

    p = sub.add_parser("varnorm", help="V2 norm or mesh-limited variation of a model")
    model_args(p)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--method", choices=["full", "pruned"], default="full")
    _add_common(p)
    p.set_defaults(func=cmd_varnorm)

    p = sub.add_parser("measure-est", help="distribution-function estimate of the variation measure")
    model_args(p)
    p.add_argument("--ladder", default=None, help="e.g. '2^-2..2^-10' or '0.25,0.125'")
    p.add_argument("--xs", default=None, help="'dyadic:k' or a comma list")
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--plot-data", default=None, help="CSV of (x, delta, value) rows")
    _add_common(p)
    p.set_defaults(func=cmd_measure_est)

    p = sub.add_parser("synthesize", help="function whose variation measure approximates a target")
    p.add_argument("--measure-json", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--max-level", type=int, default=20)
    p.add_argument("--gap", type=int, default=6)
    p.add_argument("--selection", choices=["mesh", "strict"], default="mesh")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("rademacher", help="sum of Rademacher primitives as model JSON")
    p.add_argument("--indices", required=True)
    p.add_argument("--out", default="-")
    _add_common(p)
    p.set_defaults(func=cmd_rademacher)

    p = sub.add_parser("biortho", help="biorthogonal selection and certificate checks")
    bsub = p.add_subparsers(dest="action", required=True)
    q = bsub.add_parser("select")
    q.add_argument("--candidates", required=True)
    q.add_argument("--eps", default="2^-i")
    q.add_argument("--len", type=int, required=True)
    q.add_argument("--mode", choices=["threshold", "verified"], default="verified")
    q.add_argument("--cert", default=None)
    _add_common(q)
    q = bsub.add_parser("check")
    q.add_argument("--cert", required=True)
    q.add_argument("--grid-level", type=int, default=10)
    _add_common(q)
    p.set_defaults(func=cmd_biortho)

    p = sub.add_parser("tree-norm", help="S^p norm of a tree vector")
    p.add_argument("--vector-json", required=True)
    p.add_argument("--p", type=float, default=2.0)
    _add_common(p)
    p.set_defaults(func=cmd_tree_norm)

    p = sub.add_parser("lus2", help="antichain decomposition of a weighted tree sum")
    p.add_argument("--alpha", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--depth", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_lus2)

    p = sub.add_parser("system", help="system bundles: validate, transform, example")
    ssub = p.add_subparsers(dest="action", required=True)
    q = ssub.add_parser("validate")
    q.add_argument("--bundle", required=True)
    q.add_argument("--kind", choices=["plain", "s2", "generating"], default="plain")
    _add_common(q)
    q = ssub.add_parser("transform")
    q.add_argument("--bundle", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--validate", action="store_true")
    _add_common(q)
    q = ssub.add_parser("example")
    q.add_argument("--out", required=True)
    q.add_argument("--depth", type=int, default=2)
    q.add_argument("--level", type=int, default=14)
    _add_common(q)
    p.set_defaults(func=cmd_system)

    p = sub.add_parser("equiv-const", help="empirical basis-equivalence constants")
    p.add_argument("--target", choices=["s2", "c0"], required=True)
    p.add_argument("--bundle", default=None)
    p.add_argument("--transform", action="store_true")
    p.add_argument("--cert", default=None)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-2)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--mu-norm", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_equiv_const)

    p = sub.add_parser("selftest", help="run the bundled small examples")
    _add_common(p)
    p.set_defaults(func=cmd_selftest)
    return ap


def run(argv: list[str] | None = None) -> tuple[int, dict | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code else EXIT_OK), None
    r = Run(args.command + (f" {args.action}" if getattr(args, "action", None) else ""), args)
    func: Callable = args.func
    try:
        func(r, args)
    except (PreconditionError, InputError, ValueError) as exc:
        print(f"varlib: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    report = r.report()
    for path, text in r.files:
        _write(path, text)
    if args.report:
        _write(args.report, dumps(report))
    elif not any(p == "-" for p, _ in r.files):
        sys.stdout.write(dumps(report))
    return (EXIT_OK if report["passed"] else EXIT_CHECK), report


def main(argv: list[str] | None = None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
