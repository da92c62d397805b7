"""Problem containers: box-constrained programs with complementarity pairs.

A problem is ``min f(x)`` over a box ``C`` subject to ``F_i(x) = (G_i(x), H_i(x))``
lying in D for every pair. Pairs are stored one by one (:class:`CcPair`, with
per-pair flags) and evaluated in bulk through a *batch* object, which is
either a loop over the pair callbacks or a sparse affine map when every pair
is affine (quadratic instances).
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .envelope import check_beta
from .errors import SchemaError


@dataclass(frozen=True)
class BoxSet:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise SchemaError("box bounds have different lengths")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise SchemaError("box requires lower <= upper componentwise")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def free(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def dim(self):
        return self.lower.shape[0]

    def project(self, x):
        return np.minimum(np.maximum(x, self.lower), self.upper)

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def is_bounded(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))


@dataclass(frozen=True)
class CcPair:
    """One complementarity pair ``0 <= G(x) _|_ H(x) >= 0``.

    ``eval(x)`` returns ``(G(x), H(x))``; ``jacobian(x)`` returns the 2 x n
    matrix with rows grad G, grad H. ``well_behaved`` is asserted by the
    caller and unlocks M-stationarity claims in the certificate.
    """

    eval: Callable
    jacobian: Callable
    well_behaved: bool = False
    constant_G: bool = False
    constant_H: bool = False


class CallbackBatch:
    """Evaluate pairs by calling each :class:`CcPair` in turn."""

    def __init__(self, ccs):
        self.ccs = tuple(ccs)

    def values(self, x):
        p = len(self.ccs)
        G = np.empty(p)
        H = np.empty(p)
        for i, cc in enumerate(self.ccs):
            G[i], H[i] = cc.eval(x)
        return G, H

    def vjp(self, x, yG, yH):
        out = np.zeros(x.shape[0])
        for i, cc in enumerate(self.ccs):
            if yG[i] == 0.0 and yH[i] == 0.0:
                continue
            J = np.asarray(cc.jacobian(x), dtype=float)
            out += yG[i] * J[0] + yH[i] * J[1]
        return out


class AffineBatch:
    """Pairs with ``G = AG @ x + bG`` and ``H = AH @ x + bH`` (sparse rows)."""

    def __init__(self, AG, bG, AH, bH):
        self.AG = sp.csr_array(AG)
        self.AH = sp.csr_array(AH)
        self.bG = np.asarray(bG, dtype=float)
        self.bH = np.asarray(bH, dtype=float)
        self._AGt = self.AG.T.tocsr()
        self._AHt = self.AH.T.tocsr()

    def values(self, x):
        return self.AG @ x + self.bG, self.AH @ x + self.bH

    def vjp(self, x, yG, yH):
        return self._AGt @ yG + self._AHt @ yH

    def pair(self, i, well_behaved=False):
        """A :class:`CcPair` view of row ``i``."""
        gi = self.AG[[i], :].toarray().ravel()
        hi = self.AH[[i], :].toarray().ravel()
        bg, bh = float(self.bG[i]), float(self.bH[i])
        J = np.vstack([gi, hi])
        J.flags.writeable = False
        return CcPair(
            eval=lambda x, gi=gi, hi=hi, bg=bg, bh=bh: (float(gi @ x) + bg, float(hi @ x) + bh),
            jacobian=lambda x, J=J: J,
            well_behaved=well_behaved,
            constant_G=not gi.any(),
            constant_H=not hi.any(),
        )


class MpccProblem:
    """``min f(x)`` over a box subject to ``F_i(x) in D`` for each pair."""

    def __init__(self, dim, objective, gradient, ccs=(), box=None, *, batch=None, name=None):
        self.dim = int(dim)
        if self.dim <= 0:
            raise SchemaError("dim must be positive")
        self.objective = objective
        self.gradient = gradient
        self.ccs = tuple(ccs)
        self.box = BoxSet.free(self.dim) if box is None else box
        if self.box.dim != self.dim:
            raise SchemaError(f"box has dimension {self.box.dim}, expected {self.dim}")
        self.batch = CallbackBatch(self.ccs) if batch is None else batch
        self.well_behaved = np.array([cc.well_behaved for cc in self.ccs], dtype=bool)
        self.name = name

    @property
    def p(self):
        return len(self.ccs)

    def cc_values(self, x):
        if self.p == 0:
            return np.empty(0), np.empty(0)
        return self.batch.values(x)

    def cc_vjp(self, x, yG, yH):
        if self.p == 0:
            return np.zeros(self.dim)
        return self.batch.vjp(x, yG, yH)


def _reformulated_pairs(equalities, inequalities):
    pairs = []

    def const_zero(grad_fn, sign):
        def jac(x):
            g = sign * np.asarray(grad_fn(x), dtype=float)
            return np.vstack([g, np.zeros_like(g)])
        return jac

    for c, dc in equalities:
        for sign in (1.0, -1.0):
            pairs.append(CcPair(
                eval=lambda x, c=c, s=sign: (s * float(c(x)), 0.0),
                jacobian=const_zero(dc, sign),
                well_behaved=True, constant_H=True))
    for c, dc in inequalities:
        pairs.append(CcPair(
            eval=lambda x, c=c: (-float(c(x)), 0.0),
            jacobian=const_zero(dc, -1.0),
            well_behaved=True, constant_H=True))
    return pairs


def from_general(objective, gradient, equalities=(), inequalities=(), ccs=(), box=None, *, dim=None):
    """Recast equality and inequality constraints as complementarity pairs.

    ``c(x) = 0`` becomes the two pairs ``(c, 0)`` and ``(-c, 0)``; ``c(x) <= 0``
    becomes ``(-c, 0)``. Both are well-behaved. The original ``ccs`` come
    first and keep their flags. ``equalities``/``inequalities`` are sequences
    of ``(c, grad_c)`` callables.
    """
    if dim is None:
        if box is None:
            raise SchemaError("pass either box or dim")
        dim = box.dim
    pairs = list(ccs) + _reformulated_pairs(equalities, inequalities)
    return MpccProblem(dim, objective, gradient, pairs, box)


def cc_violation(problem, x, norm=2):
    """Norm of ``min(G(x), H(x))`` taken componentwise; ``norm`` is 2 or ``np.inf``."""
    G, H = problem.cc_values(np.asarray(x, dtype=float))
    if G.size == 0:
        return 0.0
    return float(np.linalg.norm(np.minimum(G, H), ord=norm))


def envelope_residual(problem, x, beta):
    """Sum of ``r_beta(F_i(x))`` over all pairs."""
    check_beta(beta)
    G, H = problem.cc_values(np.asarray(x, dtype=float))
    if G.size == 0:
        return 0.0
    r, _, _ = _kernels.envelope_terms(G, H, beta)
    return float(r.sum())


# --------------------------------------------------------------------------
# quadratic programs with complementarity constraints
# --------------------------------------------------------------------------

@dataclass
class QuadraticMpcc:
    """``min 0.5 x'Qx + g'x + const`` over a box with CCs.

    Variables are laid out as ``x = (x0, rest)`` with ``n0 = len(x0)``.
    ``cc_index_pairs`` holds ``(j, k)`` meaning ``0 <= x_j _|_ x_k >= 0``.
    ``linear_ineq = (A, a)`` means ``A @ x0 + a <= 0``; ``linear_cc = (N, M, q)``
    means ``0 <= x1 _|_ N @ x0 + M @ x1 + q >= 0`` with ``x1 = x[n0:n0+m]``.
    """

    Q: sp.csr_array
    g: np.ndarray
    box: BoxSet
    n0: int
    cc_index_pairs: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    linear_ineq: Optional[tuple] = None
    linear_cc: Optional[tuple] = None
    const: float = 0.0
    name: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.Q = sp.csr_array(self.Q, dtype=float)
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        self.cc_index_pairs = np.asarray(self.cc_index_pairs, dtype=np.int64).reshape(-1, 2)
        self.validate()

    @property
    def n(self):
        return self.g.shape[0]

    @property
    def m(self):
        return 0 if self.linear_cc is None else np.asarray(self.linear_cc[2]).shape[0]

    @property
    def p(self):
        return self.cc_index_pairs.shape[0] + self.m

    def validate(self):
        n = self.n
        if self.Q.shape != (n, n):
            raise SchemaError(f"Q has shape {self.Q.shape}, expected {(n, n)}")
        if self.Q.nnz and abs(self.Q - self.Q.T).max() != 0.0:
            raise SchemaError("Q must be symmetric")
        if self.box.dim != n:
            raise SchemaError(f"box has dimension {self.box.dim}, expected {n}")
        if not (0 <= self.n0 <= n):
            raise SchemaError("n0 out of range")
        idx = self.cc_index_pairs.ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise SchemaError("cc pair index out of range")
        used = list(idx)
        if self.linear_ineq is not None:
            A, a = self.linear_ineq
            A = sp.csr_array(A)
            if A.shape[1] != self.n0 or np.asarray(a).shape != (A.shape[0],):
                raise SchemaError("linear_ineq dimensions inconsistent with n0")
        if self.linear_cc is not None:
            N, M, q = self.linear_cc
            m = self.m
            if sp.csr_array(N).shape != (m, self.n0) or sp.csr_array(M).shape != (m, m):
                raise SchemaError("linear_cc dimensions inconsistent")
            if self.n0 + m > n:
                raise SchemaError("linear_cc block exceeds the variable count")
            used += list(range(self.n0, self.n0 + m))
        if len(set(used)) != len(used):
            raise SchemaError("complementarity variable indices must be disjoint")

    def objective(self, x):
        return float(0.5 * (x @ (self.Q @ x)) + self.g @ x + self.const)

    def gradient(self, x):
        return self.Q @ x + self.g


def _affine_blocks(q):
    """Rows of G and H for variable pairs and linear CCs, in pair order."""
    n = q.n
    pairs = q.cc_index_pairs
    k = pairs.shape[0]
    rows = np.arange(k)
    AG = [sp.csr_array((np.ones(k), (rows, pairs[:, 0])), shape=(k, n))]
    AH = [sp.csr_array((np.ones(k), (rows, pairs[:, 1])), shape=(k, n))]
    bG = [np.zeros(k)]
    bH = [np.zeros(k)]
    if q.linear_cc is not None:
        N, M, qv = q.linear_cc
        m = q.m
        r = np.arange(m)
        AG.append(sp.csr_array((np.ones(m), (r, q.n0 + r)), shape=(m, n)))
        tail = sp.csr_array((m, n - q.n0 - m))
        AH.append(sp.hstack([sp.csr_array(N), sp.csr_array(M), tail], format="csr"))
        bG.append(np.zeros(m))
        bH.append(np.asarray(qv, dtype=float))
    return AG, bG, AH, bH


def quadratic_to_mpcc(q):
    """Wire a :class:`QuadraticMpcc` into a callback :class:`MpccProblem`.

    Variable pairs and linear CC rows are not flagged well-behaved; rows of
    ``A x0 + a <= 0`` go through :func:`from_general` and are.
    """
    q.validate()
    n = q.n
    AG, bG, AH, bH = _affine_blocks(q)
    base = AffineBatch(sp.vstack(AG, format="csr"), np.concatenate(bG),
                       sp.vstack(AH, format="csr"), np.concatenate(bH))
    ccs = [base.pair(i) for i in range(q.p)]

    inequalities = []
    if q.linear_ineq is not None:
        A, a = q.linear_ineq
        A = sp.csr_array(A, dtype=float)
        a = np.asarray(a, dtype=float)
        Afull = sp.hstack([A, sp.csr_array((A.shape[0], n - q.n0))], format="csr")
        for i in range(A.shape[0]):
            row = Afull[[i], :].toarray().ravel()
            inequalities.append((lambda x, row=row, ai=a[i]: float(row @ x) + ai,
                                 lambda x, row=row: row))
        # -(A x + a) >= 0 paired with a constant zero
        AG.append(-Afull)
        bG.append(-a)
        AH.append(sp.csr_array(Afull.shape))
        bH.append(np.zeros(A.shape[0]))

    general = from_general(q.objective, q.gradient, (), inequalities, ccs, q.box)
    batch = AffineBatch(sp.vstack(AG, format="csr"), np.concatenate(bG),
                        sp.vstack(AH, format="csr"), np.concatenate(bH))
    return MpccProblem(n, q.objective, q.gradient, general.ccs, q.box, batch=batch, name=q.name)


def quadratic_lower_bound(q):
    """A valid lower bound of the objective over the box, or ``None``.

    Bounded boxes use termwise interval arithmetic; otherwise a positive
    definite ``Q`` gives the unconstrained minimum.
    """
    lo, hi = q.box.lower, q.box.upper
    if q.box.is_bounded():
        C = sp.coo_array(q.Q)
        i, j, v = C.row, C.col, C.data
        cand = np.stack([lo[i] * lo[j], lo[i] * hi[j], hi[i] * lo[j], hi[i] * hi[j]])
        diag = i == j
        # x_i^2 over an interval: the min is 0 when the interval straddles 0
        sq_min = np.where((lo[i] <= 0) & (hi[i] >= 0), 0.0, np.minimum(lo[i] ** 2, hi[i] ** 2))
        sq_max = np.maximum(lo[i] ** 2, hi[i] ** 2)
        prod_min = np.where(diag, np.where(v >= 0, v * sq_min, v * sq_max),
                            np.min(v * cand, axis=0))
        lin_min = np.minimum(q.g * lo, q.g * hi)
        return float(0.5 * prod_min.sum() + lin_min.sum() + q.const)
    Qd = q.Q.toarray()
    try:
        L = np.linalg.cholesky(Qd)
    except np.linalg.LinAlgError:
        return None
    w = np.linalg.solve(L, q.g)
    return float(-0.5 * (w @ w) + q.const)
