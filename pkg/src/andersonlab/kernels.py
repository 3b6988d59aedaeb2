"""Hot numerical kernels, with a numba fast path and a pure-numpy fallback.

Backend selection happens once, at import time, through the environment
variable ``ANDERSON_LAB_BACKEND``:

    auto   (default) use numba when it imports, numpy otherwise
    numba  require numba (ImportError surfaces if it is missing)
    numpy  force the pure-numpy implementations

Both backends implement the same algorithms:

    tred2      Householder reduction of a real symmetric matrix to
               tridiagonal form, optionally accumulating the orthogonal
               transform.
    tql2       implicit-shift QL iteration (Wilkinson shift) on a
               tridiagonal matrix, optionally rotating an eigenvector
               matrix along.  Deflation uses the ulp-scale test
               |e_i| <= eps * (|d_i| + |d_{i+1}|).
    det2_total sum over all ordered site pairs (x, y) of the 2x2 minors
               A_xx A_yy - A_xy A_yx, plus the smallest minor seen.
    pair_sum   sum over ordered index pairs k != l of u_k u_l.

The numba variants are plain loops (njit, nogil, cached); the numpy
variants vectorize the inner updates.  Results agree to rounding but are
not bit-identical across backends; each backend is deterministic.
"""

import math
import os

import numpy as np

BACKEND_ENV = "ANDERSON_LAB_BACKEND"

_EPS = float(np.finfo(np.float64).eps)

# Sweep budget of the QL iteration, per eigenvalue.
MAX_SWEEPS = 50


def _pick_backend() -> str:
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            import numba  # noqa: F401
        except ImportError:
            return "numpy"
        return "numba"
    if choice == "numba":
        import numba  # noqa: F401  # fail loudly if forced but absent

        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(
        f"{BACKEND_ENV} must be 'auto', 'numba' or 'numpy', got {choice!r}"
    )


BACKEND = _pick_backend()
USING_NUMBA = BACKEND == "numba"


# ----------------------------------------------------------------------
# loop implementations (numba targets)
# ----------------------------------------------------------------------

def _tred2_loops(a, d, e, accumulate):
    # In-place Householder reduction; on exit a holds the accumulated
    # transform (when accumulate) and d/e the tridiagonal data, with the
    # subdiagonal in e[1:]. Rows that are already tridiagonal are skipped,
    # so a tridiagonal input comes back untouched with Q = I.
    n = a.shape[0]
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        if l > 0:
            below = 0.0
            for k in range(l):
                below += abs(a[i, k])
            if below == 0.0:
                e[i] = a[i, l]
            else:
                scale = below + abs(a[i, l])
                for k in range(i):
                    a[i, k] /= scale
                    h += a[i, k] * a[i, k]
                f = a[i, l]
                g = -math.sqrt(h) if f >= 0.0 else math.sqrt(h)
                e[i] = scale * g
                h -= f * g
                a[i, l] = f - g
                f = 0.0
                for j in range(i):
                    a[j, i] = a[i, j] / h
                    g = 0.0
                    for k in range(j + 1):
                        g += a[j, k] * a[i, k]
                    for k in range(j + 1, i):
                        g += a[k, j] * a[i, k]
                    e[j] = g / h
                    f += e[j] * a[i, j]
                hh = f / (h + h)
                for j in range(i):
                    f = a[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        a[j, k] -= f * e[k] + g * a[i, k]
        else:
            e[i] = a[i, l]
        d[i] = h
    d[0] = 0.0
    e[0] = 0.0
    for i in range(n):
        if accumulate:
            if d[i] != 0.0:
                for j in range(i):
                    g = 0.0
                    for k in range(i):
                        g += a[i, k] * a[k, j]
                    for k in range(i):
                        a[k, j] -= g * a[k, i]
            d[i] = a[i, i]
            a[i, i] = 1.0
            for j in range(i):
                a[j, i] = 0.0
                a[i, j] = 0.0
        else:
            d[i] = a[i, i]


def _tql2_loops(d, e, z, with_vectors, max_sweeps):
    # Implicit-shift QL with Wilkinson shift. d/e come from _tred2_loops
    # (subdiagonal in e[1:]); z is rotated along when with_vectors.
    # Returns -1 on success, else the index where iteration stalled.
    n = d.shape[0]
    if n == 1:
        return -1
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        its = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if its == max_sweeps:
                return l
            its += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            sgn = r if g >= 0.0 else -r
            g = d[m] - d[l] + e[l] / (g + sgn)
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if with_vectors:
                    for k in range(z.shape[0]):
                        f2 = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f2
                        z[k, i] = c * z[k, i] - s * f2
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def _det2_loops(a):
    n = a.shape[0]
    total = 0.0
    smallest = math.inf
    for x in range(n):
        axx = a[x, x]
        for y in range(n):
            det = axx * a[y, y] - a[x, y] * a[y, x]
            total += det
            if det < smallest:
                smallest = det
    return total, smallest


def _pair_sum_loops(u):
    n = u.shape[0]
    total = 0.0
    for k in range(n):
        for l in range(n):
            if k != l:
                total += u[k] * u[l]
    return total


# ----------------------------------------------------------------------
# numpy implementations
# ----------------------------------------------------------------------

def _tred2_numpy(a, d, e, accumulate):
    # Householder reduction working top-left to bottom-right with rank-2
    # BLAS updates. Same contract as _tred2_loops; a is overwritten with
    # the accumulated transform (or left meaningless when not
    # accumulating, matching only d/e).
    n = a.shape[0]
    t = a.copy()
    q = np.eye(n) if accumulate else None
    for k in range(n - 2):
        x = t[k + 1:, k]
        if not np.any(x[1:]):
            continue
        alpha = -np.linalg.norm(x) if x[0] >= 0.0 else np.linalg.norm(x)
        u = x.copy()
        u[0] -= alpha
        u /= np.linalg.norm(u)
        block = t[k + 1:, k + 1:]
        v = 2.0 * (block @ u)
        w = v - (u @ v) * u
        block -= np.outer(u, w) + np.outer(w, u)
        t[k + 1, k] = alpha
        t[k, k + 1] = alpha
        t[k + 2:, k] = 0.0
        t[k, k + 2:] = 0.0
        if accumulate:
            q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ u, u)
    d[:] = np.diag(t)
    e[0] = 0.0
    if n > 1:
        e[1:] = np.diag(t, -1)
    if accumulate:
        a[:, :] = q


def _tql2_numpy(d, e, z, with_vectors, max_sweeps):
    # Same iteration as _tql2_loops with the rotation applied to whole
    # columns of z at once.
    n = d.shape[0]
    if n == 1:
        return -1
    e[:-1] = e[1:]
    e[n - 1] = 0.0
    for l in range(n):
        its = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if its == max_sweeps:
                return l
            its += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if with_vectors:
                    f2 = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * f2
                    z[:, i] = c * z[:, i] - s * f2
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def _det2_numpy(a):
    dg = np.diag(a)
    dets = np.outer(dg, dg) - a * a.T
    return float(dets.sum()), float(dets.min())


def _pair_sum_numpy(u):
    return float(np.outer(u, u).sum() - (u * u).sum())


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------

if USING_NUMBA:
    import numba

    _jit = numba.njit(cache=True, nogil=True)
    _tred2_impl = _jit(_tred2_loops)
    _tql2_impl = _jit(_tql2_loops)
    _det2_impl = _jit(_det2_loops)
    _pair_sum_impl = _jit(_pair_sum_loops)
else:
    _tred2_impl = _tred2_numpy
    _tql2_impl = _tql2_numpy
    _det2_impl = _det2_numpy
    _pair_sum_impl = _pair_sum_numpy


def tred2(h: np.ndarray, accumulate: bool = True):
    """Reduce a symmetric matrix to tridiagonal form.

    Returns (d, e, q): diagonal, subdiagonal stored in e[1:] (e[0] = 0),
    and the accumulated orthogonal transform with q.T @ h @ q
    tridiagonal.  q is None when accumulate is False.
    """
    a = np.array(h, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    _tred2_impl(a, d, e, accumulate)
    return d, e, (a if accumulate else None)


def tql2(d: np.ndarray, e: np.ndarray, z, max_sweeps: int = MAX_SWEEPS) -> int:
    """Diagonalize tridiagonal (d, e) in place, rotating z along.

    z is modified in place when given (its columns become eigenvectors of
    the tridiagonal matrix composed with whatever transform z held on
    entry).  Pass z=None for an eigenvalue-only run.  Returns -1 on
    success, else the index at which iteration exceeded max_sweeps.
    """
    with_vectors = z is not None
    if not with_vectors:
        z = np.empty((1, 1))
    return _tql2_impl(d, e, z, with_vectors, max_sweeps)


def det2_total(a: np.ndarray):
    """Sum of 2x2 minors a_xx a_yy - a_xy a_yx over all ordered (x, y).

    Returns (total, smallest_minor).
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    return _det2_impl(a)


def pair_sum(u: np.ndarray) -> float:
    """Sum of u_k * u_l over ordered index pairs k != l."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    return float(_pair_sum_impl(u))


def implementations():
    """Available backend variants of each kernel, keyed 'numba'/'numpy'.

    The numba entry is present only when numba is the selected backend;
    used by the benchmark script and the twin-consistency tests.
    """
    table = {
        "numpy": {
            "tred2": _tred2_numpy,
            "tql2": _tql2_numpy,
            "det2": _det2_numpy,
            "pair_sum": _pair_sum_numpy,
        }
    }
    if USING_NUMBA:
        table["numba"] = {
            "tred2": _tred2_impl,
            "tql2": _tql2_impl,
            "det2": _det2_impl,
            "pair_sum": _pair_sum_impl,
        }
    return table
