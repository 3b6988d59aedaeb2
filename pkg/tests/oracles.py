"""Independent oracles used across the test suite.

Everything here is deliberately separate from the package's computation
paths: analytic spectra, characteristic-polynomial bisection, Sturm
counts, direct complex inversion for resolvents, and brute-force grid
maximization.  Tests compare package output against these.
"""

import math

import numpy as np


def path_spectrum(n: int) -> np.ndarray:
    """Eigenvalues of the n-site path with -1 hopping: -2 cos(k pi/(n+1))."""
    k = np.arange(1, n + 1)
    return np.sort(-2.0 * np.cos(k * math.pi / (n + 1)))


def box_spectrum(dimension: int, n: int) -> np.ndarray:
    """V=0 box spectrum: all sums of `dimension` path eigenvalues."""
    one = path_spectrum(n)
    total = one
    for _ in range(dimension - 1):
        total = np.add.outer(total, one).reshape(-1)
    return np.sort(total)


def charpoly_eigenvalues(h: np.ndarray, tol: float = 1e-12,
                         grid_points: int = 20001) -> np.ndarray:
    """Roots of det(h - x I) located by sign changes and bisection.

    Works for matrices with well-separated eigenvalues (random test
    matrices); the grid is wide enough via the Frobenius-norm bound.
    """
    n = h.shape[0]
    bound = float(np.linalg.norm(h)) + 1.0

    def p(x):
        return float(np.linalg.det(h - x * np.eye(n)))

    xs = np.linspace(-bound, bound, grid_points)
    values = np.array([p(x) for x in xs])
    roots = []
    for i in range(grid_points - 1):
        a, b = xs[i], xs[i + 1]
        fa, fb = values[i], values[i + 1]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            lo, hi, flo = a, b, fa
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = p(mid)
                if fm == 0.0:
                    lo = hi = mid
                elif flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    return np.array(sorted(roots))


def sturm_count_below(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Number of eigenvalues of tridiag(diag, off) strictly below x."""
    n = len(diag)
    count = 0
    q = diag[0] - x
    if q < 0:
        count += 1
    for i in range(1, n):
        denom = q if q != 0.0 else 1e-300
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom
        if q < 0:
            count += 1
    return count


def sturm_count_in_closed(diag, off, lo: float, hi: float) -> int:
    """Eigenvalue count in [lo, hi] via Sturm counts."""
    upper = sturm_count_below(diag, off, np.nextafter(hi, math.inf))
    lower = sturm_count_below(diag, off, lo)
    return upper - lower


def direct_im_resolvent(h: np.ndarray, energy: float, eta: float) -> np.ndarray:
    """Im (h - (E + i eta))^{-1} by direct complex inversion."""
    n = h.shape[0]
    z = energy + 1j * eta
    return np.linalg.inv(h - z * np.eye(n)).imag


def direct_green_column(h: np.ndarray, z: complex, y: int) -> np.ndarray:
    """Column y of the resolvent by a complex linear solve."""
    n = h.shape[0]
    rhs = np.zeros(n, dtype=complex)
    rhs[y] = 1.0
    return np.linalg.solve(h - z * np.eye(n), rhs)


def angular_span_defect(h_inner: np.ndarray, p1: np.ndarray, p2: np.ndarray,
                        energy: float, angles: int = 3600) -> float:
    """Brute-force sup over the span of ||(H - E) psi|| / ||psi||."""
    best = 0.0
    for theta in np.linspace(0.0, 2.0 * math.pi, angles, endpoint=False):
        psi = math.cos(theta) * p1 + math.sin(theta) * p2
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            continue
        value = np.linalg.norm(h_inner @ psi - energy * psi) / norm
        best = max(best, float(value))
    return best
