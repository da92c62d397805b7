"""Projected gradient baseline for bound-constrained quadratic MPCCs.

The feasible set is ``box x D^p``, which has a closed-form projection, so
every iterate is exactly feasible.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParameterError, SchemaError
from .inner import InnerResult, InnerStatus


@dataclass
class PgmOptions:
    eta_max: float = 1.0
    gamma: float = 0.5
    c: float = 1e-4
    epsilon: float = 1e-8
    max_iters: int = 100_000
    max_backtracks: int = 60
    record: bool = False

    def __post_init__(self):
        if not self.eta_max > 0 or not self.epsilon > 0:
            raise ParameterError("eta_max and epsilon must be positive")
        if not 0 < self.gamma < 1 or not 0 < self.c < 1:
            raise ParameterError("gamma and c must lie in (0, 1)")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")


def _pair_layout(q):
    if q.linear_ineq is not None or q.linear_cc is not None:
        raise SchemaError("projected gradient needs the bound-constrained form (no linear constraints)")
    pairs = q.cc_index_pairs
    lo, hi = q.box.lower, q.box.upper
    j, k = pairs[:, 0], pairs[:, 1]
    if np.any(lo[j] > 0) or np.any(lo[k] > 0) or np.any(hi[j] < 0) or np.any(hi[k] < 0):
        raise SchemaError("complementarity variables need bounds with lower <= 0 <= upper")
    other = np.setdiff1d(np.arange(q.n), pairs.ravel())
    return j, k, other


def project_box_times_D(x, q):
    """Clamp non-pair variables into the box and project each pair onto D
    (intersected with the pair's upper bounds)."""
    j, k, other = _pair_layout(q)
    x = np.asarray(x, dtype=float)
    if x.shape != (q.n,):
        raise SchemaError(f"x must have shape ({q.n},)")
    out = np.empty_like(x)
    out[other] = np.minimum(np.maximum(x[other], q.box.lower[other]), q.box.upper[other])
    if j.size:
        out[j], out[k] = _kernels.project_pairs(x[j], x[k], q.box.upper[j], q.box.upper[k])
    return out


def pgm_solve(q, x0, opts=None):
    """Projected gradient with Armijo backtracking on ``0.5 x'Qx + g'x``.

    Stops when ``||x+ - x|| / eta <= epsilon``. ``residual`` in the result is
    that last scaled step length. The decrease ``f(x+) - f(x)`` is evaluated
    as ``<d, Q(x + d/2) + g>``, which equals the difference exactly for a
    quadratic but does not cancel catastrophically.
    """
    opts = opts or PgmOptions()
    Q, g = q.Q, q.g
    x = project_box_times_D(x0, q)
    grad = Q @ x + g
    values = [q.objective(x)] if opts.record else []
    status = InnerStatus.MaxIters
    step_norm = np.inf
    iters = 0
    for _ in range(opts.max_iters):
        eta = opts.eta_max
        for _ in range(opts.max_backtracks + 1):
            xt = project_box_times_D(x - eta * grad, q)
            d = xt - x
            delta = float(d @ (Q @ (x + 0.5 * d) + g))
            if delta <= opts.c * float(grad @ d):
                break
            eta *= opts.gamma
        else:
            status = InnerStatus.LineSearchStall
            break
        step_norm = float(np.linalg.norm(d)) / eta
        if d.any():
            x = xt
            grad = Q @ x + g
            iters += 1
            if opts.record:
                values.append(q.objective(x))
        if step_norm <= opts.epsilon:
            status = InnerStatus.Converged
            break
    return InnerResult(x=x, residual=step_norm, iters=iters, status=status,
                       value=q.objective(x), values=values)
