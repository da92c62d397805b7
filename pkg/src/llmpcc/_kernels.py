"""Batched inner loops over complementarity pairs.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version. The numba path is used when numba imports and the environment
variable ``LLMPCC_DISABLE_NUMBA`` is unset (or ``0``). Both paths implement
the same branch formulas; tests compare them elementwise.

Region codes: 0 = OMinus, 1 = HPlus, 2 = HMinus, 3 = TBeta.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

O_MINUS, H_PLUS, H_MINUS, T_BETA = 0, 1, 2, 3


def _numba_requested():
    flag = os.environ.get("LLMPCC_DISABLE_NUMBA", "").strip().lower()
    return numba is not None and flag in ("", "0", "false", "no")


USE_NUMBA = _numba_requested()


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _regions_numpy(z1, z2, beta):
    omb = 1.0 - beta
    codes = np.full(z1.shape, H_MINUS, dtype=np.int8)
    hplus = z2 >= np.maximum(z1, 0.0) / omb
    codes[hplus] = H_PLUS
    tbeta = (z1 > 0.0) & (omb * z1 <= z2) & (z2 <= z1 / omb)
    codes[tbeta] = T_BETA
    codes[(z1 <= 0.0) & (z2 <= 0.0)] = O_MINUS
    return codes


def _envelope_terms_numpy(z1, z2, beta):
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    omb = 1.0 - beta
    bb = beta * (2.0 - beta)
    codes = _regions_numpy(z1, z2, beta)

    r = np.empty_like(z1)
    g1 = np.empty_like(z1)
    g2 = np.empty_like(z1)

    m = codes == O_MINUS
    r[m] = (z1[m] * z1[m] + z2[m] * z2[m]) / (2.0 * omb)
    g1[m] = z1[m] / omb
    g2[m] = z2[m] / omb

    m = codes == T_BETA
    s = z1[m] + z2[m]
    r[m] = s * s / (2.0 * bb) - (z1[m] * z1[m] + z2[m] * z2[m]) / (2.0 * beta)
    g1[m] = s / bb - z1[m] / beta
    g2[m] = s / bb - z2[m] / beta

    m = codes == H_PLUS
    mn = np.minimum(z1[m], z2[m])
    r[m] = mn * mn / (2.0 * omb)
    g1[m] = z1[m] / omb
    g2[m] = 0.0

    m = codes == H_MINUS
    mn = np.minimum(z1[m], z2[m])
    r[m] = mn * mn / (2.0 * omb)
    g1[m] = 0.0
    g2[m] = z2[m] / omb

    return r, g1, g2


def _project_pairs_numpy(z1, z2, u1, u2):
    a1 = np.minimum(np.maximum(z1, 0.0), u1)
    b2 = np.minimum(np.maximum(z2, 0.0), u2)
    da = (z1 - a1) ** 2 + z2 * z2
    db = z1 * z1 + (z2 - b2) ** 2
    take_a = da <= db
    p1 = np.where(take_a, a1, 0.0)
    p2 = np.where(take_a, 0.0, b2)
    return p1, p2


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

def _jit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True)(fn)


@_jit
def _region_scalar(a, b, beta):
    omb = 1.0 - beta
    if a <= 0.0 and b <= 0.0:
        return O_MINUS
    if a > 0.0 and omb * a <= b and b <= a / omb:
        return T_BETA
    if b >= max(a, 0.0) / omb:
        return H_PLUS
    return H_MINUS


@_jit
def _regions_loop(z1, z2, beta):
    n = z1.shape[0]
    codes = np.empty(n, dtype=np.int8)
    for i in range(n):
        codes[i] = _region_scalar(z1[i], z2[i], beta)
    return codes


@_jit
def _envelope_terms_loop(z1, z2, beta):
    n = z1.shape[0]
    omb = 1.0 - beta
    bb = beta * (2.0 - beta)
    r = np.empty(n)
    g1 = np.empty(n)
    g2 = np.empty(n)
    for i in range(n):
        a = z1[i]
        b = z2[i]
        code = _region_scalar(a, b, beta)
        if code == O_MINUS:
            r[i] = (a * a + b * b) / (2.0 * omb)
            g1[i] = a / omb
            g2[i] = b / omb
        elif code == T_BETA:
            s = a + b
            r[i] = s * s / (2.0 * bb) - (a * a + b * b) / (2.0 * beta)
            g1[i] = s / bb - a / beta
            g2[i] = s / bb - b / beta
        else:
            mn = min(a, b)
            r[i] = mn * mn / (2.0 * omb)
            if code == H_PLUS:
                g1[i] = a / omb
                g2[i] = 0.0
            else:
                g1[i] = 0.0
                g2[i] = b / omb
    return r, g1, g2


@_jit
def _project_pairs_loop(z1, z2, u1, u2):
    n = z1.shape[0]
    p1 = np.empty(n)
    p2 = np.empty(n)
    for i in range(n):
        a1 = min(max(z1[i], 0.0), u1[i])
        b2 = min(max(z2[i], 0.0), u2[i])
        da = (z1[i] - a1) ** 2 + z2[i] * z2[i]
        db = z1[i] * z1[i] + (z2[i] - b2) ** 2
        if da <= db:
            p1[i] = a1
            p2[i] = 0.0
        else:
            p1[i] = 0.0
            p2[i] = b2
    return p1, p2


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(-1)


def regions_numpy(z1, z2, beta):
    return _regions_numpy(_as_f64(z1), _as_f64(z2), float(beta))


def regions_numba(z1, z2, beta):
    return _regions_loop(_as_f64(z1), _as_f64(z2), float(beta))


def envelope_terms_numpy(z1, z2, beta):
    return _envelope_terms_numpy(_as_f64(z1), _as_f64(z2), float(beta))


def envelope_terms_numba(z1, z2, beta):
    return _envelope_terms_loop(_as_f64(z1), _as_f64(z2), float(beta))


def project_pairs_numpy(z1, z2, u1, u2):
    return _project_pairs_numpy(_as_f64(z1), _as_f64(z2), _as_f64(u1), _as_f64(u2))


def project_pairs_numba(z1, z2, u1, u2):
    return _project_pairs_loop(_as_f64(z1), _as_f64(z2), _as_f64(u1), _as_f64(u2))


if USE_NUMBA:
    regions = regions_numba
    envelope_terms = envelope_terms_numba
    project_pairs = project_pairs_numba
else:
    regions = regions_numpy
    envelope_terms = envelope_terms_numpy
    project_pairs = project_pairs_numpy


def warmup():
    """Trigger JIT compilation of the active kernels."""
    z = np.array([-1.0, 1.0, 3.0, 0.5])
    w = np.array([-1.0, 1.0, -1.0, 4.0])
    regions(z, w, 0.5)
    envelope_terms(z, w, 0.5)
    project_pairs(z, w, np.full(4, np.inf), np.full(4, np.inf))
