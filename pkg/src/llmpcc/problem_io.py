"""JSON problem files and CSV solve reports.

Problem files describe a :class:`~llmpcc.model.QuadraticMpcc`. Keys:

``n0``, ``p``
    sizes; ``p`` counts variable pairs plus linear CC rows.
``Q``
    upper-triangle ``[row, col, value]`` triplets; the lower half is implied.
``g``
    linear term, length ``n``.
``l0``, ``u0``
    bounds on the first ``n0`` variables; ``null`` (whole array or single
    entries) means unbounded.
``cc_pairs``
    ``[j, k]`` zero-based indices with ``0 <= x_j _|_ x_k >= 0``.
``A``, ``a``
    ``A @ x0 + a <= 0`` (``A`` as ``[row, col, value]`` triplets).
``N``, ``M``, ``q``
    ``0 <= x1 _|_ N @ x0 + M @ x1 + q >= 0`` with ``x1 = x[n0:n0+m]``.
``lcc``, ``ucc``
    optional bounds on the remaining variables ``x[n0:]`` (default free).
``const``
    optional constant added to the objective.
``name``, ``seed``
    optional metadata.

Serialization is canonical: sorted keys, one key per line, compact values
and shortest round-trip float text, so parse/serialize is byte-stable.
"""
import csv
import json
import math

import numpy as np
import scipy.sparse as sp

from .errors import SchemaError
from .model import BoxSet, QuadraticMpcc

REPORT_COLUMNS = ("problem", "seed", "status", "objective", "cc_violation_inf",
                  "cc_violation_2", "residual", "outer_iters", "inner_iters_total",
                  "time_ms", "label")

_KNOWN = {"n0", "p", "Q", "g", "l0", "u0", "cc_pairs", "A", "a", "N", "M", "q",
          "lcc", "ucc", "const", "name", "seed"}
_REQUIRED = ("n0", "p", "Q", "g", "cc_pairs")


def _int(doc, key):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise SchemaError(f"'{key}' must be a non-negative integer")
    return v


def _vector(v, key, length=None):
    try:
        arr = np.array(v, dtype=float)
    except (TypeError, ValueError) as err:
        raise SchemaError(f"'{key}' must be an array of numbers") from err
    if arr.ndim != 1 or (length is not None and arr.shape[0] != length):
        raise SchemaError(f"'{key}' must be an array of length {length}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"'{key}' must be finite")
    return arr


def _bounds(v, key, length, fill):
    if v is None:
        return np.full(length, fill)
    if not isinstance(v, list) or len(v) != length:
        raise SchemaError(f"'{key}' must be null or an array of length {length}")
    out = np.empty(length)
    for i, e in enumerate(v):
        if e is None:
            out[i] = fill
        elif isinstance(e, (int, float)) and not isinstance(e, bool) and math.isfinite(e):
            out[i] = e
        else:
            raise SchemaError(f"'{key}[{i}]' must be a finite number or null")
    return out


def _triplets(v, key, shape, upper=False):
    if not isinstance(v, list):
        raise SchemaError(f"'{key}' must be a list of [row, col, value] triplets")
    rows, cols, vals = [], [], []
    for t in v:
        if (not isinstance(t, list) or len(t) != 3
                or not all(isinstance(i, int) and not isinstance(i, bool) for i in t[:2])
                or not isinstance(t[2], (int, float)) or isinstance(t[2], bool)):
            raise SchemaError(f"bad triplet in '{key}': {t!r}")
        r, c, x = t
        if not (0 <= r < shape[0] and 0 <= c < shape[1]):
            raise SchemaError(f"triplet index out of range in '{key}': {t!r}")
        if upper and r > c:
            raise SchemaError(f"'{key}' must list upper-triangle entries only")
        if not math.isfinite(x):
            raise SchemaError(f"non-finite value in '{key}'")
        rows.append(r)
        cols.append(c)
        vals.append(float(x))
    M = sp.coo_array((vals, (rows, cols)), shape=shape)
    M.sum_duplicates()
    return M.tocsr()


def problem_from_dict(doc):
    """Build a :class:`QuadraticMpcc` from a parsed problem document."""
    if not isinstance(doc, dict):
        raise SchemaError("problem document must be a JSON object")
    unknown = set(doc) - _KNOWN
    if unknown:
        raise SchemaError(f"unknown keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise SchemaError(f"missing keys: {missing}")
    n0 = _int(doc, "n0")
    p = _int(doc, "p")
    g = _vector(doc["g"], "g")
    n = g.shape[0]
    if n0 > n:
        raise SchemaError("n0 exceeds the length of g")

    U = _triplets(doc["Q"], "Q", (n, n), upper=True)
    diag = sp.diags_array(U.diagonal())
    Q = (U + U.T - diag).tocsr()

    lower = np.concatenate([_bounds(doc.get("l0"), "l0", n0, -np.inf),
                            _bounds(doc.get("lcc"), "lcc", n - n0, -np.inf)])
    upper = np.concatenate([_bounds(doc.get("u0"), "u0", n0, np.inf),
                            _bounds(doc.get("ucc"), "ucc", n - n0, np.inf)])
    box = BoxSet(lower, upper)

    pairs = doc["cc_pairs"]
    if not isinstance(pairs, list) or not all(
            isinstance(pr, list) and len(pr) == 2
            and all(isinstance(i, int) and not isinstance(i, bool) for i in pr) for pr in pairs):
        raise SchemaError("'cc_pairs' must be a list of [j, k] integer pairs")
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)

    linear_ineq = None
    if "A" in doc or "a" in doc:
        if "A" not in doc or "a" not in doc:
            raise SchemaError("'A' and 'a' must appear together")
        a = _vector(doc["a"], "a")
        linear_ineq = (_triplets(doc["A"], "A", (a.shape[0], n0)), a)
    linear_cc = None
    if any(k in doc for k in ("N", "M", "q")):
        if not all(k in doc for k in ("N", "M", "q")):
            raise SchemaError("'N', 'M' and 'q' must appear together")
        qv = _vector(doc["q"], "q")
        m = qv.shape[0]
        linear_cc = (_triplets(doc["N"], "N", (m, n0)), _triplets(doc["M"], "M", (m, m)), qv)

    const = doc.get("const", 0.0)
    if isinstance(const, bool) or not isinstance(const, (int, float)) or not math.isfinite(const):
        raise SchemaError("'const' must be a finite number")
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise SchemaError("'name' must be a string")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise SchemaError("'seed' must be a non-negative integer")

    q = QuadraticMpcc(Q=Q, g=g, box=box, n0=n0, cc_index_pairs=pairs,
                      linear_ineq=linear_ineq, linear_cc=linear_cc, const=float(const),
                      name=name, seed=seed)
    if q.p != p:
        raise SchemaError(f"'p' is {p} but the file defines {q.p} complementarity constraints")
    return q


def _triplet_list(M, upper=False):
    C = sp.coo_array(M)
    if upper:
        C = sp.triu(C).tocoo()
    C.sum_duplicates()
    keep = C.data != 0.0
    order = np.lexsort((C.col[keep], C.row[keep]))
    r, c, v = C.row[keep][order], C.col[keep][order], C.data[keep][order]
    return [[int(i), int(j), float(x)] for i, j, x in zip(r, c, v)]


def _bound_list(v):
    return [float(x) if math.isfinite(x) else None for x in v]


def problem_to_dict(q):
    lo, hi = q.box.lower, q.box.upper
    doc = {
        "n0": int(q.n0),
        "p": int(q.p),
        "Q": _triplet_list(q.Q, upper=True),
        "g": [float(x) for x in q.g],
        "l0": _bound_list(lo[:q.n0]),
        "u0": _bound_list(hi[:q.n0]),
        "cc_pairs": [[int(j), int(k)] for j, k in q.cc_index_pairs],
    }
    if np.any(np.isfinite(lo[q.n0:])):
        doc["lcc"] = _bound_list(lo[q.n0:])
    if np.any(np.isfinite(hi[q.n0:])):
        doc["ucc"] = _bound_list(hi[q.n0:])
    if q.linear_ineq is not None:
        A, a = q.linear_ineq
        doc["A"] = _triplet_list(A)
        doc["a"] = [float(x) for x in a]
    if q.linear_cc is not None:
        N, M, qv = q.linear_cc
        doc["N"] = _triplet_list(N)
        doc["M"] = _triplet_list(M)
        doc["q"] = [float(x) for x in qv]
    if q.const != 0.0:
        doc["const"] = float(q.const)
    if q.name is not None:
        doc["name"] = q.name
    if q.seed is not None:
        doc["seed"] = int(q.seed)
    return doc


def dumps_problem(q):
    """Canonical text of a problem file."""
    doc = problem_to_dict(q)
    lines = [f"  {json.dumps(k)}: {json.dumps(doc[k], separators=(',', ':'), allow_nan=False)}"
             for k in sorted(doc)]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def loads_problem(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SchemaError(f"invalid JSON: {err}") from err
    return problem_from_dict(doc)


def read_problem(path):
    with open(path, encoding="utf-8") as fh:
        return loads_problem(fh.read())


def write_problem(q, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_problem(q))


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def format_number(v):
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def format_row(row):
    """Render a report dict as CSV cells in column order."""
    cells = []
    for col in REPORT_COLUMNS:
        v = row.get(col)
        if v is None:
            cells.append("")
        elif isinstance(v, str):
            cells.append(v)
        else:
            cells.append(format_number(v))
    return cells


def write_report(rows, fh, header=True):
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(REPORT_COLUMNS)
    for row in rows:
        w.writerow(format_row(row))


def read_report(fh):
    return list(csv.DictReader(fh))
