"""Command-line front end: ``llmpcc {generate,solve,bench,certify}``.

Exit codes: 0 certified (or success), 1 solver-level failure, 2 usage or I/O
error.
"""
import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import generators, problem_io
from .baseline import PgmOptions, pgm_solve
from .errors import DomainError, ParameterError, SchemaError
from .homotopy import HomotopyParams, SolveStatus, certify, solve
from .model import cc_violation, quadratic_lower_bound, quadratic_to_mpcc

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
START_RANGE = 50.0


class UsageError(Exception):
    pass


def _fail(msg):
    print(f"llmpcc: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _load(path):
    try:
        return problem_io.read_problem(path)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from err
    except SchemaError as err:
        raise UsageError(f"{path}: {err}") from err


def random_start(n, seed, run=None):
    key = seed if run is None else [seed, run]
    rng = np.random.Generator(np.random.PCG64(key))
    return rng.uniform(-START_RANGE, START_RANGE, n)


def start_point(spec, q):
    """``zeros``, ``lower`` (finite lower bounds, 0 elsewhere) or ``random:<seed>``."""
    if spec == "zeros":
        return np.zeros(q.n)
    if spec == "lower":
        lo = q.box.lower
        return np.where(np.isfinite(lo), lo, 0.0)
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            seed = -1
        if seed < 0:
            raise UsageError(f"bad --x0 seed in {spec!r}")
        return random_start(q.n, seed)
    raise UsageError(f"--x0 must be zeros, lower or random:<seed>, got {spec!r}")


def homotopy_row(name, seed, q, problem, report):
    cert = report.certificate
    x = report.x_final
    return {
        "problem": name, "seed": seed, "status": report.status.value,
        "objective": q.objective(x),
        "cc_violation_inf": cc_violation(problem, x, np.inf),
        "cc_violation_2": cc_violation(problem, x, 2),
        "residual": cert.residual, "outer_iters": report.outer_iters,
        "inner_iters_total": report.inner_iters_total,
        "time_ms": 1e3 * report.time_s, "label": cert.label.value,
    }


def trace_document(report):
    return {
        "status": report.status.value,
        "label": report.certificate.label.value,
        "stage1_mode": None if report.stage1_mode is None else report.stage1_mode.value,
        "x_final": [float(v) for v in report.x_final],
        "lambda_final": float(report.lambda_final),
        "beta": float(report.beta),
        "outer_bound": report.outer_bound,
        "messages": report.messages,
        "trace": [
            {"nu": t.nu, "lambda": t.lambda_, "s_value": t.s_value,
             "inner_residual": t.inner_residual, "envelope_residual": t.envelope_residual,
             "cc_violation": t.cc_violation, "inner_iters": t.inner_iters,
             "inner_status": t.inner_status.value, "x": [float(v) for v in t.x]}
            for t in report.trace
        ],
    }


def _params(args, f_lower=None):
    try:
        return HomotopyParams(epsilon=args.eps, beta=args.beta, lambda0=args.lambda0,
                              rho=args.rho, max_outer=args.max_outer, f_lower=f_lower)
    except ParameterError as err:
        raise UsageError(str(err)) from err


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_generate(args):
    if args.kind == "kth3":
        q = generators.kth3_quadratic()
    else:
        if args.n0 is None or args.p is None:
            raise UsageError("generate needs --n0 and --p")
        try:
            spec = generators.BoundQpccSpec(args.n0, args.p, args.seed,
                                            None if args.cc_upper <= 0 else args.cc_upper)
        except ParameterError as err:
            raise UsageError(str(err)) from err
        q = generators.gen_bound_qpcc(spec)
    try:
        problem_io.write_problem(q, args.out)
    except OSError as err:
        raise UsageError(f"cannot write {args.out}: {err.strerror or err}") from err
    return EXIT_OK


def cmd_solve(args):
    q = _load(args.problem)
    problem = quadratic_to_mpcc(q)
    x0 = start_point(args.x0, q)
    params = _params(args, quadratic_lower_bound(q))
    report = solve(problem, params, x0, skip_stage1=args.skip_stage1)
    name = q.name or args.problem
    problem_io.write_report([homotopy_row(name, q.seed, q, problem, report)], sys.stdout)
    for msg in report.messages:
        print(msg, file=sys.stderr)
    if args.trace:
        try:
            with open(args.trace, "w", encoding="utf-8") as fh:
                json.dump(trace_document(report), fh, indent=1)
                fh.write("\n")
        except OSError as err:
            raise UsageError(f"cannot write {args.trace}: {err.strerror or err}") from err
    return EXIT_OK if report.status is SolveStatus.CertifiedStationary else EXIT_FAIL


def _bench_job(job):
    """One bench cell; returns the list of report rows it produces."""
    kind, eps, a, b, c = job
    try:
        if kind == "kth3":
            seed, run = a, b
            q = generators.kth3_quadratic()
            problem = quadratic_to_mpcc(q)
            params = HomotopyParams(epsilon=eps, f_lower=quadratic_lower_bound(q))
            report = solve(problem, params, random_start(2, seed, run))
            return [homotopy_row(f"kth3-run{run}:homotopy", seed, q, problem, report)]
        n0, p, seed = a, b, c
        q = generators.gen_bound_qpcc(generators.BoundQpccSpec(n0, p, seed))
        problem = quadratic_to_mpcc(q)
        x0 = np.concatenate([q.box.lower[:n0], np.zeros(2 * p)])
        params = HomotopyParams(epsilon=eps, f_lower=quadratic_lower_bound(q))
        report = solve(problem, params, x0, skip_stage1=True)
        rows = [homotopy_row(f"{q.name}:homotopy", seed, q, problem, report)]
        t0 = time.perf_counter()
        res = pgm_solve(q, x0, PgmOptions(epsilon=eps))
        elapsed = time.perf_counter() - t0
        rows.append({
            "problem": f"{q.name}:pgm", "seed": seed, "status": res.status.value,
            "objective": res.value,
            "cc_violation_inf": cc_violation(problem, res.x, np.inf),
            "cc_violation_2": cc_violation(problem, res.x, 2),
            "residual": res.residual, "outer_iters": res.iters,
            "inner_iters_total": res.iters, "time_ms": 1e3 * elapsed, "label": "None",
        })
        return rows
    except Exception as err:  # recorded per row; the run carries on
        return [{"problem": f"{kind}:{a}:{b}:{c}", "seed": None,
                 "status": f"Error: {type(err).__name__}: {err}", "label": "None"}]


def _parse_sizes(text):
    sizes = []
    for item in text.split(","):
        try:
            n0, p = (int(v) for v in item.lower().split("x"))
        except ValueError as err:
            raise UsageError(f"--sizes entries look like 10x20, got {item!r}") from err
        sizes.append((n0, p))
    return sizes


def _parse_seeds(text):
    try:
        if "-" in text and "," not in text:
            lo, hi = (int(v) for v in text.split("-"))
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError as err:
        raise UsageError(f"--seeds takes a list like 0,1,2 or a range like 0-9, got {text!r}") from err


def bench_jobs(suite, sizes, seeds, runs, eps):
    if suite == "kth3":
        return [("kth3", eps, s, r, None) for s in seeds for r in range(runs)]
    return [("bound-qpcc", eps, n0, p, s) for n0, p in sizes for s in seeds]


def cmd_bench(args):
    if args.jobs < 1 or args.runs < 1:
        raise UsageError("--jobs and --runs must be positive")
    jobs = bench_jobs(args.suite, _parse_sizes(args.sizes), _parse_seeds(args.seeds),
                      args.runs, args.eps)
    if args.jobs == 1:
        results = [_bench_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_job, jobs))
    rows = [row for rs in results for row in rs]
    try:
        if args.out == "-":
            problem_io.write_report(rows, sys.stdout)
        else:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                problem_io.write_report(rows, fh)
    except OSError as err:
        raise UsageError(f"cannot write {args.out}: {err.strerror or err}") from err
    failed = [r for r in rows if r["status"].startswith("Error")]
    for r in failed:
        print(f"{r['problem']}: {r['status']}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_certify(args):
    q = _load(args.problem)
    try:
        point = np.array(json.loads(args.point), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as err:
        raise UsageError(f"--point must be a JSON array of numbers: {err}") from err
    if point.shape != (q.n,):
        raise UsageError(f"--point has {point.size} entries, the problem has {q.n} variables")
    try:
        cert = certify(quadratic_to_mpcc(q), point, args.lambda_, args.beta, args.eps)
    except (DomainError, ParameterError) as err:
        raise UsageError(str(err)) from err
    json.dump(cert.to_dict(), sys.stdout, indent=1)
    sys.stdout.write("\n")
    return EXIT_OK


# --------------------------------------------------------------------------

def _solver_flags(sp):
    sp.add_argument("--eps", type=float, default=1e-8,
                    help="tolerance (default 1e-8; 1e-6 is more robust in double precision)")
    sp.add_argument("--beta", type=float, default=0.999)
    sp.add_argument("--rho", type=float, default=0.8)
    sp.add_argument("--lambda0", type=float, default=1.0)
    sp.add_argument("--max-outer", type=int, default=200)


def build_parser():
    ap = argparse.ArgumentParser(prog="llmpcc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random bound-constrained QPCC (or kth3) problem file")
    g.add_argument("--kind", choices=("bound-qpcc", "kth3"), default="bound-qpcc")
    g.add_argument("--n0", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cc-upper", type=float, default=20.0,
                   help="upper bound on complementarity variables; <= 0 leaves them free")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the homotopy solver on a problem file")
    s.add_argument("--problem", required=True)
    _solver_flags(s)
    s.add_argument("--x0", default="zeros", help="zeros, lower or random:<seed>")
    s.add_argument("--skip-stage1", action="store_true")
    s.add_argument("--trace", help="write the outer-iteration trace as JSON")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark matrix and write a CSV report")
    b.add_argument("--suite", choices=("kth3", "bound-qpcc"), required=True)
    b.add_argument("--sizes", default="10x20", help="comma-separated n0xp sizes (bound-qpcc)")
    b.add_argument("--seeds", default="0", help="0,1,2 or 0-9")
    b.add_argument("--runs", type=int, default=20, help="random starts per seed (kth3)")
    b.add_argument("--eps", type=float, default=1e-6)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("certify", help="print the stationarity certificate at a point")
    c.add_argument("--problem", required=True)
    c.add_argument("--point", required=True, help="JSON array")
    c.add_argument("--lambda", dest="lambda_", type=float, required=True)
    c.add_argument("--beta", type=float, default=0.999)
    c.add_argument("--eps", type=float, default=1e-8)
    c.set_defaults(func=cmd_certify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        return _fail(str(err))


if __name__ == "__main__":
    sys.exit(main())
