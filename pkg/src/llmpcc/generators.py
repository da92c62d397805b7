"""Reference and random test instances.

Random instances use numpy's PCG64 bit generator seeded with the instance
seed, so a seed reproduces the same instance on every platform numpy
supports.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .model import AffineBatch, BoxSet, MpccProblem, QuadraticMpcc

KTH3_GLOBAL = (np.array([0.0, 1.0]), 0.5)
KTH3_LOCAL = (np.array([1.0, 0.0]), 1.0)


@dataclass(frozen=True)
class BoundQpccSpec:
    """Size and seed of a bound-constrained QPCC; ``n = n0 + 2p``.

    ``cc_upper`` bounds the complementarity variables to ``[0, cc_upper]``;
    ``None`` leaves them free (the objective may then be unbounded below).
    """

    n0: int
    p: int
    seed: int = 0
    cc_upper: Optional[float] = 20.0

    def __post_init__(self):
        if self.n0 < 0 or self.p < 0 or self.n0 + self.p == 0:
            raise ParameterError("need n0 >= 0, p >= 0 and at least one variable")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @property
    def n(self):
        return self.n0 + 2 * self.p


def rayleigh_quotients(Q, vectors):
    Q = sp.csr_array(Q)
    return np.array([float(v @ (Q @ v)) / float(v @ v) for v in vectors])


def _probe_vectors(Q, seed, n_random=8):
    n = Q.shape[0]
    rng = np.random.Generator(np.random.PCG64([seed, 1]))
    probes = [rng.standard_normal(n) for _ in range(n_random)]
    C = sp.triu(sp.coo_array(Q), k=1).tocoo()
    if C.nnz:
        k = int(np.argmax(np.abs(C.data)))
        i, j = C.row[k], C.col[k]
        for sign in (1.0, -1.0):
            v = np.zeros(n)
            v[i], v[j] = 1.0, sign
            probes.append(v)
    return probes


def gen_bound_qpcc(spec):
    """Random indefinite QPCC with bounds on ``x0`` and pairs ``(x1_i, x2_i)``.

    ``Q`` gets about ``n^2/4`` nonzeros: ``n^2/8`` distinct strictly-upper
    positions with standard normal values, mirrored. ``g`` is uniform on
    [-10, 10], ``l0`` uniform on [-10, 10] and ``u0 = l0 + U[0, 20]``.
    """
    n0, p, n = spec.n0, spec.p, spec.n
    rng = np.random.Generator(np.random.PCG64(spec.seed))

    n_upper = n * (n - 1) // 2
    k = min(n_upper, int(round(n * n / 8.0)))
    iu, ju = np.triu_indices(n, 1)
    pick = np.sort(rng.choice(n_upper, size=k, replace=False)) if k else np.empty(0, dtype=np.int64)
    vals = rng.standard_normal(k)
    rows = np.concatenate([iu[pick], ju[pick]])
    cols = np.concatenate([ju[pick], iu[pick]])
    Q = sp.coo_array((np.concatenate([vals, vals]), (rows, cols)), shape=(n, n)).tocsr()

    g = rng.uniform(-10.0, 10.0, n)
    l0 = rng.uniform(-10.0, 10.0, n0)
    u0 = l0 + rng.uniform(0.0, 20.0, n0)

    if n >= 2:
        rq = rayleigh_quotients(Q, _probe_vectors(Q, spec.seed))
        if not (rq.min() < 0.0 < rq.max()):
            shift = 1.0 + float(np.abs(Q.diagonal()).max())
            D = np.zeros(n)
            D[0], D[1] = shift, -shift
            Q = (Q + sp.diags_array(D)).tocsr()

    if spec.cc_upper is None:
        cc_lo, cc_hi = np.full(2 * p, -np.inf), np.full(2 * p, np.inf)
    else:
        cc_lo, cc_hi = np.zeros(2 * p), np.full(2 * p, float(spec.cc_upper))
    box = BoxSet(np.concatenate([l0, cc_lo]), np.concatenate([u0, cc_hi]))
    pairs = np.column_stack([n0 + np.arange(p), n0 + p + np.arange(p)])
    return QuadraticMpcc(Q=Q, g=g, box=box, n0=n0, cc_index_pairs=pairs,
                         name=f"bound-qpcc-{n0}-{p}-{spec.seed}", seed=spec.seed)


def is_indefinite(Q, seed=0):
    rq = rayleigh_quotients(Q, _probe_vectors(sp.csr_array(Q), seed))
    return bool(rq.min() < 0.0 < rq.max())


def _kth3_f(x):
    return 0.5 * (x[0] - 1.0) ** 2 + (x[1] - 1.0) ** 2


def _kth3_grad(x):
    return np.array([x[0] - 1.0, 2.0 * (x[1] - 1.0)])


def kth3():
    """``min 0.5(x1-1)^2 + (x2-1)^2  s.t.  0 <= x1 _|_ x2 >= 0``.

    Global minimiser (0, 1) with value 0.5; local minimiser (1, 0) with 1.
    """
    batch = AffineBatch(sp.csr_array(np.array([[1.0, 0.0]])), [0.0],
                        sp.csr_array(np.array([[0.0, 1.0]])), [0.0])
    return MpccProblem(2, _kth3_f, _kth3_grad, [batch.pair(0)], BoxSet.free(2),
                       batch=batch, name="kth3")


def kth3_quadratic():
    """kth3 as a :class:`QuadraticMpcc`; the constant 1.5 is kept in ``const``."""
    Q = sp.csr_array(np.diag([1.0, 2.0]))
    return QuadraticMpcc(Q=Q, g=np.array([-1.0, -2.0]), box=BoxSet.free(2), n0=0,
                         cc_index_pairs=np.array([[0, 1]]), const=1.5, name="kth3")
