"""Geometry of the complementarity set D = {z >= 0 : z1*z2 = 0} in R^2.

Closed forms for the distance to D, the projection onto D, the Moreau
envelope of its indicator, and the Lasry-Lions double envelope written in
scaled form ``r_beta`` (value) and ``R_beta`` (gradient) with
``beta = mu / lambda``. Normal-cone membership tests for the certificate
live here too.

All functions take a point as any length-2 sequence and return plain floats
or length-2 ``numpy`` arrays.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError


class Region(enum.Enum):
    OMinus = "OMinus"
    HPlus = "HPlus"
    HMinus = "HMinus"
    TBeta = "TBeta"


class Cone(enum.Enum):
    Regular = "Regular"
    Limiting = "Limiting"
    Clarke = "Clarke"


@dataclass(frozen=True)
class EnvelopeParams:
    """Smoothing parameters; ``mu = beta * lambda_`` so that 0 < mu < lambda."""

    lambda_: float
    beta: float

    def __post_init__(self):
        check_lambda(self.lambda_)
        check_beta(self.beta)

    @property
    def mu(self):
        return self.beta * self.lambda_


def check_beta(beta):
    if not (0.0 < beta < 1.0):
        raise ParameterError(f"beta must lie in (0, 1), got {beta!r}")


def check_lambda(lam):
    if not (lam > 0.0) or not math.isfinite(lam):
        raise ParameterError(f"lambda must be positive and finite, got {lam!r}")


def _pt(z):
    z1, z2 = z
    return float(z1), float(z2)


def classify_region(z, beta):
    """Region of the piecewise definition containing ``z``.

    Boundary points are assigned in the order OMinus, TBeta, HPlus, HMinus
    with non-strict inequalities.
    """
    check_beta(beta)
    z1, z2 = _pt(z)
    omb = 1.0 - beta
    if z1 <= 0.0 and z2 <= 0.0:
        return Region.OMinus
    if z1 > 0.0 and omb * z1 <= z2 <= z1 / omb:
        return Region.TBeta
    if z2 >= max(z1, 0.0) / omb:
        return Region.HPlus
    return Region.HMinus


def in_interior_T(z, beta):
    check_beta(beta)
    z1, z2 = _pt(z)
    omb = 1.0 - beta
    return z1 > 0.0 and omb * z1 < z2 < z1 / omb


def dist_to_D(z):
    # distance to the projection; avoids cancellation in |z|^2 - max(z+)^2
    z1, z2 = _pt(z)
    p1, p2 = project_D((z1, z2))
    return math.hypot(z1 - p1, z2 - p2)


def project_D(z):
    """Euclidean projection onto D; the tie z1 = z2 > 0 maps to (z1, 0)."""
    z1, z2 = _pt(z)
    if z1 > 0.0 and z2 > 0.0:
        if z1 >= z2:
            return np.array([z1, 0.0])
        return np.array([0.0, z2])
    return np.array([max(z1, 0.0), max(z2, 0.0)])


def moreau_env(z, lambda_):
    check_lambda(lambda_)
    return dist_to_D(z) ** 2 / (2.0 * lambda_)


def p_lambda_mu(z, lambda_, mu):
    """Maximiser in the sup defining the double envelope (piecewise linear)."""
    check_lambda(lambda_)
    if not (0.0 < mu < lambda_):
        raise ParameterError(f"need 0 < mu < lambda, got mu={mu!r}, lambda={lambda_!r}")
    beta = mu / lambda_
    z1, z2 = _pt(z)
    scale = lambda_ / (lambda_ - mu)
    region = classify_region((z1, z2), beta)
    if region is Region.OMinus:
        return np.array([scale * z1, scale * z2])
    if region is Region.HPlus:
        return np.array([scale * z1, z2])
    if region is Region.HMinus:
        return np.array([z1, scale * z2])
    t = lambda_ / (2.0 * lambda_ - mu) * (z1 + z2)
    return np.array([t, t])


def r_beta(z, beta):
    """Scaled double envelope: lambda * env_{lambda, beta*lambda} delta_D(z)."""
    z1, z2 = _pt(z)
    region = classify_region((z1, z2), beta)
    omb = 1.0 - beta
    if region is Region.OMinus:
        return (z1 * z1 + z2 * z2) / (2.0 * omb)
    if region is Region.TBeta:
        s = z1 + z2
        return s * s / (2.0 * beta * (2.0 - beta)) - (z1 * z1 + z2 * z2) / (2.0 * beta)
    m = min(z1, z2)
    return m * m / (2.0 * omb)


def R_beta(z, beta):
    """Gradient of :func:`r_beta`; globally Lipschitz."""
    z1, z2 = _pt(z)
    region = classify_region((z1, z2), beta)
    omb = 1.0 - beta
    if region is Region.OMinus:
        return np.array([z1 / omb, z2 / omb])
    if region is Region.TBeta:
        c = (z1 + z2) / (beta * (2.0 - beta))
        return np.array([c - z1 / beta, c - z2 / beta])
    if region is Region.HPlus:
        return np.array([z1 / omb, 0.0])
    return np.array([0.0, z2 / omb])


def lipschitz_modulus(beta):
    check_beta(beta)
    return max(1.0 / beta, 1.0 / (1.0 - beta))


def pl_constant(beta):
    """Polyak-Lojasiewicz constant of ``r_beta`` as stated for the double envelope.

    Numerically the inequality only holds with this constant for beta >= 1/2;
    on the diagonal of the T region the ratio is 1/(2 - beta).
    """
    check_beta(beta)
    return min(1.0 / (1.0 - beta), (1.0 - beta) / (beta * (2.0 - beta)))


def project_D_C_beta(z, beta):
    """Projection onto D, except points in the open T region go to the origin."""
    if in_interior_T(z, beta):
        return np.zeros(2)
    return project_D(z)


def cone_membership(y, zbar, cone, tol=1e-8):
    """Whether ``y`` lies in the regular, limiting or Clarke cone of D at ``zbar``.

    ``=0`` and ``>0`` comparisons use the absolute tolerance ``tol``.
    """
    y1, y2 = _pt(y)
    z1, z2 = _pt(zbar)
    cone = Cone(cone)
    if z1 < -tol or z2 < -tol or min(z1, z2) > tol:
        raise DomainError(f"zbar={zbar!r} is not in D within tol={tol}")
    if z1 > tol:
        return abs(y1) <= tol
    if z2 > tol:
        return abs(y2) <= tol
    # zbar is the origin
    nonpos = y1 <= tol and y2 <= tol
    if cone is Cone.Regular:
        return nonpos
    in_D = y1 >= -tol and y2 >= -tol and min(abs(y1), abs(y2)) <= tol
    if cone is Cone.Limiting:
        return nonpos or in_D
    nonneg = y1 >= -tol and y2 >= -tol
    return nonpos or in_D or nonneg
