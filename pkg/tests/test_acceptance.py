"""Acceptance criteria 1-8.

Each test records one ``criterion N: PASS|FAIL`` line; the lines are printed
in the pytest terminal summary (see conftest.py) and also when this file is
run directly with ``python3 tests/test_acceptance.py``.
"""
import io
import json
import math
import sys
import time

import numpy as np
import pytest

from oracles import GridSpec, brute_double_envelope, brute_moreau
from llmpcc import _kernels, baseline
from llmpcc.baseline import PgmOptions
from llmpcc.cli import main as cli_main
from llmpcc.cli import random_start
from llmpcc.envelope import (Cone, R_beta, cone_membership, lipschitz_modulus, moreau_env,
                             pl_constant, r_beta)
from llmpcc.generators import BoundQpccSpec, gen_bound_qpcc, kth3, kth3_quadratic
from llmpcc.homotopy import HomotopyParams, SolveStatus, certify, outer_iteration_bound, solve
from llmpcc.model import CcPair, MpccProblem, cc_violation, quadratic_lower_bound, quadratic_to_mpcc
from llmpcc.problem_io import write_problem

RESULTS = {}
BETAS = (0.5, 0.9, 0.999)
EPS = np.finfo(float).eps


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


@pytest.fixture(scope="module", autouse=True)
def _warm():
    _kernels.warmup()


# ---------------------------------------------------------------- shared runs

_cache = {}


def kth3_runs():
    """20 seeded kth3 solves with defaults at eps 1e-6 (criteria 2, 7, 8)."""
    if "kth3" not in _cache:
        q = kth3_quadratic()
        prob = quadratic_to_mpcc(q)
        params = HomotopyParams(epsilon=1e-6, f_lower=quadratic_lower_bound(q))
        t0 = time.perf_counter()
        reps = [solve(prob, params, random_start(2, 0, run)) for run in range(20)]
        _cache["kth3"] = (q, prob, reps, time.perf_counter() - t0)
    return _cache["kth3"]


def qpcc_runs():
    """Homotopy and PGM on ten (20, 40) instances at eps 1e-6 (criteria 3, 7, 8)."""
    if "qpcc" not in _cache:
        out = []
        t0 = time.perf_counter()
        for seed in range(10):
            q = gen_bound_qpcc(BoundQpccSpec(20, 40, seed))
            prob = quadratic_to_mpcc(q)
            x0 = np.concatenate([q.box.lower[:20], np.zeros(80)])
            params = HomotopyParams(epsilon=1e-6, f_lower=quadratic_lower_bound(q))
            rep = solve(prob, params, x0, skip_stage1=True)
            pgm = baseline.pgm_solve(q, x0, PgmOptions(epsilon=1e-6, record=True))
            out.append((q, prob, rep, pgm))
        _cache["qpcc"] = (out, time.perf_counter() - t0)
    return _cache["qpcc"]


# ---------------------------------------------------------------- criteria

def check_1():
    params = HomotopyParams(beta=0.9, schedule=[100.0, 1.0, 0.01], epsilon=1e-8)
    refs = np.array([(1.0, 1.0), (0.1, 1.0), (0.0, 1.0)])
    starts = [(1.0, 1.0), (1.05, 0.95), (0.95, 1.05), (1.01, 1.0), (1.0, 0.99)]
    worst_path, worst_final = 0.0, 0.0
    t0 = time.perf_counter()
    ok = True
    for s in starts:
        rep = solve(kth3(), params, np.array(s), skip_stage1=True)
        xs = np.array([t.x for t in rep.trace])
        if xs.shape != refs.shape:
            ok = False
            continue
        worst_path = max(worst_path, float(np.abs(xs - refs).max()))
        worst_final = max(worst_final, float(np.abs(xs[-1] - refs[-1]).max()))
    elapsed = time.perf_counter() - t0
    ok = ok and worst_path <= 1e-2 and worst_final <= 1e-3 and elapsed < 1.0
    return record(1, ok, f"{len(starts)} starts, max path err {worst_path:.2e}, "
                         f"final err {worst_final:.2e}, {elapsed:.3f} s")


def check_2():
    q, prob, reps, elapsed = kth3_runs()
    ok = elapsed < 30.0
    n_global = 0
    for rep in reps:
        f = q.objective(rep.x_final)
        ok &= rep.status is SolveStatus.CertifiedStationary
        ok &= cc_violation(prob, rep.x_final) <= 1e-6
        ok &= min(abs(f - 0.5), abs(f - 1.0)) <= 1e-4
        n_global += abs(f - 0.5) <= 1e-4
    return record(2, bool(ok), f"{sum(r.status is SolveStatus.CertifiedStationary for r in reps)}/20 "
                               f"certified, reached 0.5 in {n_global}/20, {elapsed:.2f} s")


def check_3():
    runs, elapsed = qpcc_runs()
    ok = elapsed < 60.0
    worst = 0.0
    pgm_feasible = True
    for q, prob, rep, pgm in runs:
        ok &= rep.status is SolveStatus.CertifiedStationary
        worst = max(worst, cc_violation(prob, rep.x_final, np.inf))
        pgm_feasible &= cc_violation(prob, pgm.x, np.inf) == 0.0 and q.box.contains(pgm.x)
    pgm_feasible &= _pgm_iterates_feasible(runs)
    ok = bool(ok and worst <= 1e-6 and pgm_feasible)
    n_cert = sum(r[2].status is SolveStatus.CertifiedStationary for r in runs)
    return record(3, ok, f"{n_cert}/10 certified, max viol_inf {worst:.2e}, "
                         f"PGM exactly feasible: {bool(pgm_feasible)}, {elapsed:.2f} s")


def _pgm_iterates_feasible(runs):
    # spy on the projection so every trial point is checked, not just the output
    real = baseline.project_box_times_D
    seen = []

    def spy(x, q):
        out = real(x, q)
        seen.append(out)
        return out

    baseline.project_box_times_D = spy
    try:
        ok = True
        for q, prob, _, _ in runs[:3]:
            seen.clear()
            baseline.pgm_solve(q, np.concatenate([q.box.lower[:20], np.zeros(80)]),
                               PgmOptions(epsilon=1e-6))
            ok &= all(cc_violation(prob, z, np.inf) == 0.0 and q.box.contains(z) for z in seen)
        return ok
    finally:
        baseline.project_box_times_D = real


def check_4():
    pts = GridSpec(-3.0, 3.0, 61).points()
    grid = [(a, b) for a in pts for b in pts]
    worst_dbl = 0.0
    for lam, beta in ((1.0, 0.5), (1.0, 0.9)):
        mu = beta * lam
        for z in grid:
            worst_dbl = max(worst_dbl, abs(r_beta(z, beta) / lam - brute_double_envelope(z, lam, mu)))
    worst_mor = max(abs(moreau_env(z, 1.0) - brute_moreau(z, 1.0)) for z in grid)
    ok = worst_dbl <= 5e-3 and worst_mor <= 1e-6
    return record(4, ok, f"double envelope max err {worst_dbl:.2e}, Moreau max err {worst_mor:.2e}")


def _same_region_box(z, beta, h):
    regs = _kernels.regions(np.array([z[0], z[0] + h, z[0] - h, z[0], z[0]]),
                            np.array([z[1], z[1], z[1], z[1] + h, z[1] - h]), beta)
    return bool(np.all(regs == regs[0]))


def check_5():
    rng = np.random.Generator(np.random.PCG64(2024))
    h = 1e-6
    # finite differences at points at least 1e-4 away from region boundaries
    worst_fd = 0.0
    n_fd = 0
    while n_fd < 1000:
        beta = BETAS[n_fd % 3]
        z = rng.uniform(-3, 3, 2)
        if not _same_region_box(z, beta, 1e-4):
            continue
        g = np.array([(r_beta(z + h * e, beta) - r_beta(z - h * e, beta)) / (2 * h)
                      for e in np.eye(2)])
        R = R_beta(z, beta)
        worst_fd = max(worst_fd, np.linalg.norm(g - R) / max(np.linalg.norm(R), 1.0))
        n_fd += 1
    ok_fd = worst_fd <= 1e-6

    ok_lip, ok_pl = True, True
    worst_lip, worst_pl = 0.0, 0.0
    for beta in BETAS:
        a = rng.uniform(-3, 3, (100000, 2))
        # half the pairs are close neighbours, the rest independent
        b = np.where(np.arange(100000)[:, None] % 2 == 0,
                     a + rng.normal(scale=1e-2, size=a.shape), rng.uniform(-3, 3, a.shape))
        _, Ra1, Ra2 = _kernels.envelope_terms(a[:, 0], a[:, 1], beta)
        _, Rb1, Rb2 = _kernels.envelope_terms(b[:, 0], b[:, 1], beta)
        lhs = np.hypot(Ra1 - Rb1, Ra2 - Rb2)
        rhs = lipschitz_modulus(beta) * np.hypot(*(a - b).T)
        ratio = float(np.max(lhs / np.maximum(rhs, 1e-300)))
        worst_lip = max(worst_lip, ratio)
        # slack is the rounding level of the subtracted gradients, exact in real arithmetic
        ulp = 8 * EPS * (np.hypot(Ra1, Ra2) + np.hypot(Rb1, Rb2))
        ok_lip &= bool(np.all(lhs <= rhs + ulp))

        z = rng.uniform(-3, 3, (100000, 2))
        r, R1, R2 = _kernels.envelope_terms(z[:, 0], z[:, 1], beta)
        lhs = 0.5 * (R1 ** 2 + R2 ** 2)
        rhs = pl_constant(beta) * r
        ok_pl &= bool(np.all(lhs >= rhs - 8 * EPS * (lhs + rhs)))
        worst_pl = max(worst_pl, float(np.max((rhs - lhs) / np.maximum(rhs, 1e-300))))

    t = np.linspace(0.01, 3, 300)
    r, R1, R2 = _kernels.envelope_terms(t, t, 0.5)
    eq_gap = float(np.max(np.abs(0.5 * (R1 ** 2 + R2 ** 2) - pl_constant(0.5) * r)))
    ok_eq = eq_gap <= 1e-12
    ok = bool(ok_fd and ok_lip and ok_pl and ok_eq)
    return record(5, ok, f"FD max rel err {worst_fd:.2e}; Lipschitz max ratio - 1 = {worst_lip - 1:.1e}; "
                         f"PL max shortfall {max(worst_pl, 0.0):.2e}; diagonal equality gap {eq_gap:.2e}")


def check_6():
    rng = np.random.Generator(np.random.PCG64(77))
    trials, hits, bad = 100000, 0, 0
    for _ in range(trials):
        p = int(rng.integers(1, 6))
        beta = float(rng.uniform(0.01, 0.999))
        eps = float(10.0 ** rng.uniform(-8, -1))
        # points on D plus perturbations at the scale of eps
        t = rng.uniform(0, 5, p)
        on_first = rng.random(p) < 0.5
        G = np.where(on_first, t, 0.0) + eps * rng.uniform(-1.5, 1.5, p)
        H = np.where(on_first, 0.0, t) + eps * rng.uniform(-1.5, 1.5, p)
        r, _, _ = _kernels.envelope_terms(G, H, beta)
        if r.sum() <= eps * eps / 2:
            hits += 1
            bad += np.linalg.norm(np.minimum(G, H)) > eps
    return record(6, bad == 0 and hits > 0,
                  f"{trials} samples, {hits} met the stopping test, {bad} counterexamples")


def check_7():
    checked, violations = 0, 0
    _, _, reps, _ = kth3_runs()
    runs, _ = qpcc_runs()
    for rep in list(reps) + [r[2] for r in runs]:
        if rep.status is not SolveStatus.CertifiedStationary:
            continue
        checked += 1
        violations += rep.outer_iters > math.ceil(rep.outer_bound)
    worked = outer_iteration_bound(HomotopyParams(epsilon=1e-2, lambda0=1.0, rho=0.8, f_lower=0.0), 1.0)
    ok_worked = abs(worked - 48.51) <= 0.01
    ok = checked > 0 and violations == 0 and ok_worked
    return record(7, ok, f"{checked} certifying runs, {violations} above the bound; "
                         f"worked input gives {worked:.4f} (target 48.51 +/- 0.01)")


def _recertify(tmp_dir, q, rep, eps, tag):
    path = tmp_dir / f"{tag}.json"
    write_problem(q, path)
    point = json.dumps([float(v) for v in rep.x_final])
    argv = ["certify", "--problem", str(path), "--point", point, "--lambda",
            repr(float(rep.lambda_final)), "--beta", repr(float(rep.beta)), "--eps", repr(eps)]
    saved = sys.stdout
    buf = io.StringIO()
    sys.stdout = buf
    try:
        code = cli_main(argv)
    finally:
        sys.stdout = saved
    return code == 0 and json.loads(buf.getvalue())["label"] == rep.certificate.label.value


def check_8(tmp_dir):
    q_k, _, reps, _ = kth3_runs()
    runs, _ = qpcc_runs()
    cases = [(q_k, rep, f"kth3-{i}") for i, rep in enumerate(reps)]
    cases += [(q, rep, q.name) for q, _, rep, _ in runs]
    checked, mismatched = 0, 0
    for q, rep, tag in cases:
        if rep.status is not SolveStatus.CertifiedStationary:
            continue
        checked += 1
        mismatched += not _recertify(tmp_dir, q, rep, 1e-6, tag)

    # synthetic pairs with F in the open T region: y > 0 at z = 0
    rng = np.random.Generator(np.random.PCG64(8))
    synth_ok, n_synth = True, 0
    for beta in BETAS:
        for _ in range(20):
            d = float(rng.uniform(1e-3, 1.0))
            c = float(rng.uniform(1 - beta + 1e-3, 1 / (1 - beta) - 1e-3))
            cc = CcPair(eval=lambda x, d=d, c=c: (d, c * d), jacobian=lambda x: np.zeros((2, 1)),
                        well_behaved=True)
            prob = MpccProblem(1, lambda x: 0.0, lambda x: np.zeros(1), [cc])
            v = certify(prob, np.zeros(1), 1.0, beta, 1.0).per_constraint[0]
            clarke = cone_membership(v.y, v.z, Cone.Clarke)
            limiting = cone_membership(v.y, v.z, Cone.Limiting)
            synth_ok &= bool(np.all(v.z == 0) and np.all(v.y > 0) and clarke and not limiting)
            n_synth += 1
    ok = checked > 0 and mismatched == 0 and synth_ok
    return record(8, ok, f"{checked} certified reports re-validated, {mismatched} label mismatches; "
                         f"{n_synth} int-T points Clarke-true/Limiting-false: {synth_ok}")


# ---------------------------------------------------------------- pytest entry points

def test_criterion_1_kth3_trace():
    assert check_1(), RESULTS[1]


def test_criterion_2_kth3_robustness():
    assert check_2(), RESULTS[2]


def test_criterion_3_bound_qpcc():
    assert check_3(), RESULTS[3]


def test_criterion_4_oracle_equivalence():
    assert check_4(), RESULTS[4]


def test_criterion_5_calculus():
    assert check_5(), RESULTS[5]


def test_criterion_6_stopping_lemma():
    assert check_6(), RESULTS[6]


def test_criterion_7_outer_bound():
    assert check_7(), RESULTS[7]


def test_criterion_8_certificate_soundness(tmp_path):
    assert check_8(tmp_path), RESULTS[8]


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    _kernels.warmup()
    with tempfile.TemporaryDirectory() as tmp:
        for n, fn in enumerate([check_1, check_2, check_3, check_4, check_5, check_6, check_7,
                                lambda: check_8(Path(tmp))], start=1):
            fn()
            print(RESULTS[n], flush=True)
    sys.exit(0 if all("PASS" in v for v in RESULTS.values()) else 1)
