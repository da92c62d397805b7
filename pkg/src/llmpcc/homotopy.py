"""Two-stage homotopy on the double-envelope smoothing.

Stage 1 drives ``sum_i r_beta(F_i(x))`` towards zero to find a near-feasible
start ``x0``. Stage 2 solves the smoothed problems for ``lambda_nu =
lambda0 * rho**nu``, each warm-started at whichever of the previous iterate
and ``x0`` has the lower smoothed value, and stops once
``sum_i r_beta(F_i(x)) <= eps^2 / 2``. The last iterate is then certified.
"""
import enum
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .envelope import Cone, check_beta, cone_membership, project_D_C_beta
from .errors import ParameterError
from .inner import InnerOptions, InnerStatus, solve_inner, stationarity_residual
from .model import cc_violation, envelope_residual
from .smoothing import FeasibilityProblem, SmoothedProblem

LAMBDA_FLOOR = 1e-18


class SolveStatus(enum.Enum):
    CertifiedStationary = "CertifiedStationary"
    OuterLimit = "OuterLimit"
    InnerFailure = "InnerFailure"
    Stage1Failure = "Stage1Failure"
    # stopping test met but some cone membership or tolerance failed
    Uncertified = "Uncertified"


class Stage1Mode(enum.Enum):
    NearFeasible = "NearFeasible"
    HeuristicStationary = "HeuristicStationary"
    Skipped = "Skipped"


class Label(enum.Enum):
    ApproxC = "ApproxC"
    ApproxM = "ApproxM"
    NoLabel = "None"


@dataclass
class HomotopyParams:
    """Outer-loop settings. ``schedule`` replaces the geometric lambda rule
    with an explicit list of values; ``decreasing_tol`` uses
    ``max(eps, 0.5**nu)`` as the inner tolerance at outer step ``nu``."""

    epsilon: float = 1e-8
    beta: float = 0.999
    lambda0: float = 1.0
    rho: float = 0.8
    max_outer: int = 200
    f_lower: Optional[float] = None
    inner_max_iters: int = 50_000
    decreasing_tol: bool = False
    schedule: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        check_beta(self.beta)
        if not self.lambda0 > 0:
            raise ParameterError("lambda0 must be positive")
        if not 0 < self.rho < 1:
            raise ParameterError("rho must lie in (0, 1)")
        if self.max_outer < 1:
            raise ParameterError("max_outer must be positive")
        if self.schedule is not None and any(not v > 0 for v in self.schedule):
            raise ParameterError("schedule values must be positive")

    def lambda_at(self, nu):
        if self.schedule is not None:
            return float(self.schedule[nu - 1])
        return self.lambda0 * self.rho ** nu


@dataclass
class TraceEntry:
    nu: int
    lambda_: float
    s_value: float
    inner_residual: float
    envelope_residual: float
    cc_violation: float
    inner_iters: int
    inner_status: InnerStatus
    x: np.ndarray


@dataclass
class ConstraintVerdict:
    y: np.ndarray
    z: np.ndarray
    cone: Cone
    member: bool


@dataclass
class StationarityCertificate:
    residual: float
    cc_violation: float
    per_constraint: List[ConstraintVerdict]
    label: Label

    def to_dict(self):
        return {
            "residual": self.residual,
            "cc_violation": self.cc_violation,
            "label": self.label.value,
            "per_constraint": [
                {"y": [float(v) for v in c.y], "z": [float(v) for v in c.z],
                 "cone": c.cone.value, "member": bool(c.member)}
                for c in self.per_constraint
            ],
        }


@dataclass
class SolveReport:
    x_final: np.ndarray
    status: SolveStatus
    trace: List[TraceEntry]
    certificate: StationarityCertificate
    stage1_mode: Optional[Stage1Mode]
    x0: np.ndarray
    lambda_final: float
    beta: float
    stage1_iters: int = 0
    inner_iters_total: int = 0
    time_s: float = 0.0
    outer_bound: Optional[float] = None
    messages: List[str] = field(default_factory=list)

    @property
    def outer_iters(self):
        return len(self.trace)


class Stage1Error(RuntimeError):
    def __init__(self, msg, x, inner):
        super().__init__(msg)
        self.x = x
        self.inner = inner


def stage1_feasibility(problem, params, x_start):
    """Approximately minimise ``sum_i r_beta(F_i(x))`` over the box.

    Returns ``(x0, mode, inner_result)``. Raises :class:`Stage1Error` when the
    result is neither near-feasible nor eps-stationary.
    """
    eps = params.epsilon
    feas = FeasibilityProblem(problem, params.beta)
    opts = InnerOptions(tol=eps, max_iters=params.inner_max_iters, value_stop=eps * eps / 4.0)
    res = solve_inner(feas, x_start, opts)
    if envelope_residual(problem, res.x, params.beta) <= eps * eps / 4.0:
        return res.x, Stage1Mode.NearFeasible, res
    if res.residual <= eps:
        return res.x, Stage1Mode.HeuristicStationary, res
    raise Stage1Error(f"stage 1 stopped with {res.status.value}, residual {res.residual:.3e}",
                      res.x, res)


def outer_iteration_bound(params, f_x0):
    """``1 + log_{1/rho}(4 lambda0 (f(x0) - f_lower) / eps^2)``, clamped below at 1."""
    if params.f_lower is None:
        raise ParameterError("outer_iteration_bound needs params.f_lower")
    gap = f_x0 - params.f_lower
    if gap < 0:
        raise ParameterError("f_x0 is below f_lower")
    if gap == 0:
        return 1.0
    arg = 4.0 * params.lambda0 * gap / params.epsilon ** 2
    return max(1.0, 1.0 + math.log(arg) / math.log(1.0 / params.rho))


def certify(problem, x, lambda_, beta, epsilon, tol=1e-8):
    """Approximate C-/M-stationarity certificate at ``x``.

    Multipliers are ``y_i = R_beta(F_i(x)) / lambda`` and reference points
    ``z_i`` the projection onto D (the origin inside the open T region).
    Well-behaved pairs are checked against the limiting cone, the rest
    against the Clarke cone.
    """
    x = np.asarray(x, dtype=float)
    sp = SmoothedProblem(problem, (lambda_, beta))
    residual = stationarity_residual(sp.grad(x), x, problem.box)
    viol = cc_violation(problem, x, 2)
    G, H = problem.cc_values(x)
    Y = sp.multipliers(x)
    verdicts = []
    all_clarke = True
    all_limiting = problem.p > 0
    for i in range(problem.p):
        y = Y[i]
        z = project_D_C_beta((G[i], H[i]), beta)
        wb = bool(problem.well_behaved[i])
        cone = Cone.Limiting if wb else Cone.Clarke
        member = cone_membership(y, z, cone, tol)
        clarke = member if cone is Cone.Clarke else cone_membership(y, z, Cone.Clarke, tol)
        all_clarke &= clarke
        all_limiting &= wb and member
        verdicts.append(ConstraintVerdict(y=y.copy(), z=z, cone=cone, member=member))
    label = Label.NoLabel
    if residual <= epsilon and viol <= epsilon:
        if all_limiting:
            label = Label.ApproxM
        elif all_clarke:
            label = Label.ApproxC
    return StationarityCertificate(residual=residual, cc_violation=viol,
                                   per_constraint=verdicts, label=label)


def solve(problem, params=None, x_start=None, skip_stage1=False):
    """Run the two-stage homotopy and return a :class:`SolveReport`."""
    params = params or HomotopyParams()
    t_start = time.perf_counter()
    eps, beta = params.epsilon, params.beta
    box = problem.box
    x_start = np.zeros(problem.dim) if x_start is None else np.asarray(x_start, dtype=float)
    if x_start.shape != (problem.dim,):
        raise ParameterError(f"x_start must have shape ({problem.dim},)")
    x_start = box.project(x_start)

    messages = []
    stage1_iters = 0
    if skip_stage1:
        x0, mode = x_start, Stage1Mode.Skipped
    else:
        try:
            x0, mode, res1 = stage1_feasibility(problem, params, x_start)
            stage1_iters = res1.iters
        except Stage1Error as err:
            cert = certify(problem, err.x, params.lambda_at(1), beta, eps)
            return SolveReport(
                x_final=err.x, status=SolveStatus.Stage1Failure, trace=[], certificate=cert,
                stage1_mode=None, x0=err.x, lambda_final=params.lambda_at(1), beta=beta,
                stage1_iters=err.inner.iters, inner_iters_total=err.inner.iters,
                time_s=time.perf_counter() - t_start, messages=[str(err)])

    outer_bound = None
    if params.f_lower is not None:
        outer_bound = outer_iteration_bound(params, float(problem.objective(x0)))

    trace = []
    x_prev = x0
    lam = params.lambda_at(1)
    status = SolveStatus.OuterLimit
    stopped = False
    inner_total = stage1_iters
    n_outer = params.max_outer if params.schedule is None else min(params.max_outer, len(params.schedule))
    for nu in range(1, n_outer + 1):
        lam_nu = params.lambda_at(nu)
        if lam_nu < LAMBDA_FLOOR:
            messages.append(f"lambda fell below {LAMBDA_FLOOR:g} at outer step {nu}")
            break
        lam = lam_nu
        sp = SmoothedProblem(problem, (lam, beta))
        s_prev = sp.value(x_prev)
        s_0 = sp.value(x0)
        # ties keep the previous iterate
        start = x_prev if s_prev <= s_0 else x0
        tol = max(eps, 0.5 ** nu) if params.decreasing_tol else eps
        opts = InnerOptions(tol=tol, max_iters=params.inner_max_iters,
                            target_value=min(s_prev, s_0))
        res = solve_inner(sp, start, opts)
        inner_total += res.iters
        env = envelope_residual(problem, res.x, beta)
        trace.append(TraceEntry(
            nu=nu, lambda_=lam, s_value=res.value, inner_residual=res.residual,
            envelope_residual=env, cc_violation=cc_violation(problem, res.x, 2),
            inner_iters=res.iters, inner_status=res.status, x=res.x.copy()))
        x_prev = res.x
        if not res.converged:
            status = SolveStatus.InnerFailure
            messages.append(f"inner solver {res.status.value} at outer step {nu}, "
                            f"residual {res.residual:.3e}")
            break
        if env <= eps * eps / 2.0:
            stopped = True
            break

    cert = certify(problem, x_prev, lam, beta, eps)
    if stopped:
        status = (SolveStatus.CertifiedStationary if cert.label is not Label.NoLabel
                  else SolveStatus.Uncertified)
    return SolveReport(
        x_final=x_prev, status=status, trace=trace, certificate=cert, stage1_mode=mode,
        x0=x0, lambda_final=lam, beta=beta, stage1_iters=stage1_iters,
        inner_iters_total=inner_total, time_s=time.perf_counter() - t_start,
        outer_bound=outer_bound, messages=messages)
