"""Smoothed objective ``s(x) = f(x) + (1/lambda) * sum_i r_beta(F_i(x))``."""
import numpy as np

from . import _kernels
from .envelope import EnvelopeParams


class _PairCache:
    """Remembers ``F(x)`` and the envelope terms at the most recent point."""

    def __init__(self, problem, beta):
        self.problem = problem
        self.beta = beta
        self._x = None
        self._terms = None

    def terms(self, x):
        if self._x is None or not np.array_equal(self._x, x):
            G, H = self.problem.cc_values(x)
            if G.size:
                r, RG, RH = _kernels.envelope_terms(G, H, self.beta)
            else:
                r = RG = RH = np.empty(0)
            self._x = np.array(x, dtype=float, copy=True)
            self._terms = (G, H, r, RG, RH)
        return self._terms


class SmoothedProblem:
    """Read-only view of an :class:`~llmpcc.model.MpccProblem` at fixed (lambda, beta).

    The per-point cache is not thread safe; use one instance per worker.
    """

    def __init__(self, base, params):
        if not isinstance(params, EnvelopeParams):
            params = EnvelopeParams(*params)
        self.base = base
        self.params = params
        self._cache = _PairCache(base, params.beta)

    @property
    def box(self):
        return self.base.box

    @property
    def lambda_(self):
        return self.params.lambda_

    @property
    def beta(self):
        return self.params.beta

    def penalty(self, x):
        _, _, r, _, _ = self._cache.terms(x)
        return float(r.sum())

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.base.objective(x)) + self.penalty(x) / self.lambda_

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.array(self.base.gradient(x), dtype=float)
        _, _, _, RG, RH = self._cache.terms(x)
        if RG.size:
            g += self.base.cc_vjp(x, RG, RH) / self.lambda_
        return g

    def value_and_grad(self, x):
        return self.value(x), self.grad(x)

    def multipliers(self, x):
        """``y_i = R_beta(F_i(x)) / lambda`` as a (p, 2) array."""
        x = np.asarray(x, dtype=float)
        _, _, _, RG, RH = self._cache.terms(x)
        return np.column_stack([RG, RH]) / self.lambda_


class FeasibilityProblem:
    """Stage-1 objective ``sum_i r_beta(F_i(x))`` over the box."""

    def __init__(self, base, beta):
        self.base = base
        self.beta = beta
        self._cache = _PairCache(base, beta)

    @property
    def box(self):
        return self.base.box

    def value(self, x):
        _, _, r, _, _ = self._cache.terms(np.asarray(x, dtype=float))
        return float(r.sum())

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        _, _, _, RG, RH = self._cache.terms(x)
        return self.base.cc_vjp(x, RG, RH)

    def value_and_grad(self, x):
        return self.value(x), self.grad(x)


def s_eval(sp, x):
    return sp.value(x)


def s_grad(sp, x):
    return sp.grad(x)


def multipliers(sp, x):
    return sp.multipliers(x)
