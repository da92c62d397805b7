"""Compare the numba and numpy kernel paths.

Part one times each batched kernel directly on both paths for a range of
batch sizes. Part two runs the same bound QPCC solve in two subprocesses,
one with ``LLMPCC_DISABLE_NUMBA=1``, to show the end-to-end effect.

    python3 benchmarks/bench_kernels.py [--sizes 40,1000,100000] [--repeat 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from llmpcc import _kernels

SOLVE_SNIPPET = """
import time
import numpy as np
from llmpcc import _kernels
from llmpcc.generators import BoundQpccSpec, gen_bound_qpcc
from llmpcc.homotopy import HomotopyParams, solve
from llmpcc.model import quadratic_to_mpcc
_kernels.warmup()
q = gen_bound_qpcc(BoundQpccSpec({n0}, {p}, 0))
x0 = np.concatenate([q.box.lower[:{n0}], np.zeros(2 * {p})])
t = time.perf_counter()
rep = solve(quadratic_to_mpcc(q), HomotopyParams(epsilon=1e-6), x0, skip_stage1=True)
print(f"{{time.perf_counter() - t:.3f}} {{rep.status.value}} {{rep.inner_iters_total}}")
"""


def kernel_table(sizes, repeat):
    rng = np.random.Generator(np.random.PCG64(0))
    _kernels.warmup()
    _kernels.envelope_terms_numba(np.zeros(1), np.zeros(1), 0.9)
    _kernels.project_pairs_numba(np.zeros(1), np.zeros(1), np.ones(1), np.ones(1))
    print(f"{'kernel':<16}{'n':>9}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for n in sizes:
        z1, z2 = rng.uniform(-3, 3, n), rng.uniform(-3, 3, n)
        u = np.full(n, 20.0)
        cases = {
            "regions": (_kernels.regions_numpy, _kernels.regions_numba, (z1, z2, 0.9)),
            "envelope_terms": (_kernels.envelope_terms_numpy, _kernels.envelope_terms_numba,
                               (z1, z2, 0.9)),
            "project_pairs": (_kernels.project_pairs_numpy, _kernels.project_pairs_numba,
                              (z1, z2, u, u)),
        }
        for name, (f_np, f_nb, args) in cases.items():
            t_np = min(timeit.repeat(lambda: f_np(*args), number=1, repeat=repeat)) * 1e6
            t_nb = min(timeit.repeat(lambda: f_nb(*args), number=1, repeat=repeat)) * 1e6
            print(f"{name:<16}{n:>9}{t_np:>12.1f}{t_nb:>12.1f}{t_np / t_nb:>9.2f}")


def solve_table(n0, p):
    print(f"\nbound QPCC solve n0={n0} p={p}, eps 1e-6 (seconds, status, inner iterations)")
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, LLMPCC_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(n0=n0, p=p)],
                             env=env, capture_output=True, text=True, check=True)
        print(f"{label:<6} {out.stdout.strip()}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="40,1000,100000")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--solve-size", default="20x40", help="n0xp for the end-to-end run")
    args = ap.parse_args()
    kernel_table([int(s) for s in args.sizes.split(",")], args.repeat)
    n0, p = (int(v) for v in args.solve_size.split("x"))
    solve_table(n0, p)


if __name__ == "__main__":
    main()
