"""Full eigendecomposition of dense real symmetric matrices.

Householder tridiagonalization followed by implicit-shift QL iteration
with eigenvector accumulation (kernels.tred2 / kernels.tql2).  This is
the numerical engine behind every spectral quantity in the package; the
Monte Carlo loops call symmetric_eigenvalues(), which skips the
eigenvector work.

Fixed tolerances (not user-tunable):

    orthonormality   max |V^T V - I|      <= 1e-12 * m
    residual         max ||H v - lam v||  <= 1e-10 * (1 + ||H||_F)

The QL iteration is allowed 50 sweeps per eigenvalue; exceeding that
raises EigenConvergenceError naming the stuck index.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lattice import is_exactly_symmetric

GRAM_TOL_PER_ORDER = 1e-12
RESIDUAL_TOL = 1e-10


class EigenConvergenceError(RuntimeError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(
            f"implicit-shift QL iteration exceeded {kernels.MAX_SWEEPS} sweeps "
            f"at eigenvalue index {index}"
        )


@dataclass(frozen=True)
class EigenDecomposition:
    """Sorted eigenvalues with orthonormal eigenvectors (column k <-> value k)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def order(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    max_orthogonality_defect: float
    trace_defect: float


def _as_dense_symmetric(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if not is_exactly_symmetric(h):
        raise ValueError("matrix is not exactly symmetric")
    return h


def tridiagonalize(h):
    """Orthogonal reduction to tridiagonal form.

    Returns (diagonal, off_diagonal, transform) with
    transform.T @ h @ transform tridiagonal; off_diagonal has length
    m - 1.  A matrix that is already tridiagonal comes back unchanged
    with the identity transform.
    """
    h = _as_dense_symmetric(h)
    d, e, q = kernels.tred2(h, accumulate=True)
    return d, e[1:].copy(), q


def solve_tridiagonal(diagonal, off_diagonal, transform=None) -> EigenDecomposition:
    """Eigendecomposition of a symmetric tridiagonal matrix.

    The eigenvectors are back-transformed through `transform` when given
    (the accumulated matrix from tridiagonalize), so the result
    decomposes the original dense matrix.
    """
    d = np.asarray(diagonal, dtype=np.float64).copy()
    m = d.shape[0]
    off = np.asarray(off_diagonal, dtype=np.float64)
    if off.shape != (m - 1,) and not (m == 1 and off.size == 0):
        raise ValueError("off_diagonal must have length m - 1")
    e = np.zeros(m)
    if m > 1:
        e[1:] = off
    if transform is None:
        z = np.eye(m)
    else:
        z = np.array(transform, dtype=np.float64, copy=True)
        if z.shape != (m, m):
            raise ValueError("transform shape does not match")
    stuck = kernels.tql2(d, e, z)
    if stuck >= 0:
        raise EigenConvergenceError(stuck)
    order = np.argsort(d, kind="stable")
    return EigenDecomposition(eigenvalues=d[order], eigenvectors=z[:, order])


def symmetric_eigen(h) -> EigenDecomposition:
    """Full decomposition of a dense symmetric matrix."""
    d, off, q = tridiagonalize(h)
    return solve_tridiagonal(d, off, q)


def symmetric_eigenvalues(h) -> np.ndarray:
    """Sorted eigenvalues only; the fast path for counting ensembles."""
    h = _as_dense_symmetric(h)
    d, e, _ = kernels.tred2(h, accumulate=False)
    stuck = kernels.tql2(d, e, None)
    if stuck >= 0:
        raise EigenConvergenceError(stuck)
    d.sort()
    return d


def residual_report(h, decomposition: EigenDecomposition) -> ResidualReport:
    """Worst residual, worst Gram defect, and trace defect of a decomposition."""
    h = np.asarray(h, dtype=np.float64)
    lam = decomposition.eigenvalues
    v = decomposition.eigenvectors
    if h.shape != (lam.shape[0], lam.shape[0]):
        raise ValueError("matrix and decomposition orders differ")
    residuals = np.linalg.norm(h @ v - v * lam, axis=0)
    gram = v.T @ v - np.eye(lam.shape[0])
    return ResidualReport(
        max_residual=float(residuals.max()),
        max_orthogonality_defect=float(np.abs(gram).max()),
        trace_defect=float(abs(lam.sum() - np.trace(h))),
    )


def check_decomposition(h, decomposition: EigenDecomposition) -> ResidualReport:
    """Assert the module tolerances; returns the report on success."""
    rep = residual_report(h, decomposition)
    m = decomposition.order
    hnorm = float(np.linalg.norm(h))
    if np.any(np.diff(decomposition.eigenvalues) < 0):
        raise AssertionError("eigenvalues are not sorted ascending")
    if rep.max_orthogonality_defect > GRAM_TOL_PER_ORDER * m:
        raise AssertionError(
            f"orthogonality defect {rep.max_orthogonality_defect:.3e} exceeds "
            f"{GRAM_TOL_PER_ORDER * m:.3e}"
        )
    if rep.max_residual > RESIDUAL_TOL * (1.0 + hnorm):
        raise AssertionError(
            f"residual {rep.max_residual:.3e} exceeds "
            f"{RESIDUAL_TOL * (1.0 + hnorm):.3e}"
        )
    return rep
