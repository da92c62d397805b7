"""Projected gradient solver for smooth objectives over a box."""
import enum
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, ParameterError

BB_MIN, BB_MAX = 1e-12, 1e12
_EPS = np.finfo(float).eps


class InnerStatus(enum.Enum):
    Converged = "Converged"
    MaxIters = "MaxIters"
    LineSearchStall = "LineSearchStall"


@dataclass
class InnerOptions:
    """Options for :func:`solve_inner`.

    ``step_init`` is ``"bb"`` (Barzilai-Borwein, safeguarded) or a fixed
    positive trial step. ``target_value`` must be reached as well as ``tol``
    before the solver reports convergence. ``value_stop`` ends the run as
    soon as the objective drops to that level.
    """

    tol: float = 1e-8
    max_iters: int = 50_000
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    step_init: Union[str, float] = "bb"
    target_value: Optional[float] = None
    value_stop: Optional[float] = None
    max_backtracks: int = 60
    record: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be positive")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack_factor < 1:
            raise ParameterError("armijo_c and backtrack_factor must lie in (0, 1)")
        if self.step_init != "bb" and not (isinstance(self.step_init, (int, float)) and self.step_init > 0):
            raise ParameterError("step_init must be 'bb' or a positive number")


@dataclass
class InnerResult:
    x: np.ndarray
    residual: float
    iters: int
    status: InnerStatus
    value: float
    values: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status is InnerStatus.Converged


def _residual(g, x, lo, hi):
    at_lo = x == lo
    at_hi = x == hi
    r = np.where(at_lo, np.maximum(-g, 0.0), np.abs(g))
    r = np.where(at_hi, np.maximum(g, 0.0), r)
    r = np.where(at_lo & at_hi, 0.0, r)
    return float(np.linalg.norm(r))


def stationarity_residual(g, x, box):
    """``dist(-g, N_C(x))`` for a box ``C``; bounds are matched exactly."""
    g = np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    if not box.contains(x):
        raise DomainError("x lies outside the box")
    return _residual(g, x, box.lower, box.upper)


def _target_met(value, target):
    return target is None or value <= target + 1e-12 * max(1.0, abs(target))


def solve_inner(objective, x0, opts=None):
    """Projected gradient with Armijo backtracking along the projection arc.

    ``objective`` exposes ``value(x)``, ``grad(x)`` and ``box``. An accepted
    trial ``x+ = P(x - t g)`` satisfies ``f(x+) <= f(x) + c <g, x+ - x>``.
    When ``f(x+) - f(x)`` is below the rounding level of ``f`` the decrease is
    measured by the trapezoid rule ``<g(x) + g(x+), x+ - x> / 2`` instead.
    """
    opts = opts or InnerOptions()
    box = objective.box
    lo, hi = box.lower, box.upper
    x = box.project(np.asarray(x0, dtype=float))
    f = objective.value(x)
    g = objective.grad(x)
    values = [f] if opts.record else []

    bb = opts.step_init == "bb"
    t = 1.0 / max(1.0, float(np.linalg.norm(g))) if bb else float(opts.step_init)
    c, gamma = opts.armijo_c, opts.backtrack_factor

    res = _residual(g, x, lo, hi)
    status = InnerStatus.MaxIters
    it = 0
    while True:
        if opts.value_stop is not None and f <= opts.value_stop:
            status = InnerStatus.Converged
            break
        if res <= opts.tol and _target_met(f, opts.target_value):
            status = InnerStatus.Converged
            break
        if it >= opts.max_iters:
            break

        tk = t
        accepted = False
        for _ in range(opts.max_backtracks + 1):
            xt = np.minimum(np.maximum(x - tk * g, lo), hi)
            d = xt - x
            if not d.any():
                break
            gd = float(g @ d)
            ft = objective.value(xt)
            delta = ft - f
            gt = None
            if abs(delta) <= 64.0 * _EPS * max(abs(f), abs(ft)):
                gt = objective.grad(xt)
                delta = 0.5 * float((g + gt) @ d)
            if delta <= c * gd:
                accepted = True
                break
            tk *= gamma
        if not accepted:
            status = InnerStatus.LineSearchStall
            break

        if gt is None:
            gt = objective.grad(xt)
        if bb:
            y = gt - g
            sy = float(d @ y)
            if sy > 0.0:
                t = min(max(float(d @ d) / sy, BB_MIN), BB_MAX)
            else:
                t = min(2.0 * tk, BB_MAX)
        x, f, g = xt, ft, gt
        it += 1
        res = _residual(g, x, lo, hi)
        if opts.record:
            values.append(f)

    return InnerResult(x=x, residual=res, iters=it, status=status, value=f, values=values)
