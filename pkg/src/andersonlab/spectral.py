"""Spectral counting, gaps, Green functions, and per-sample pair identities.

For an interval J = [E - eta, E + eta] the indicator of J is dominated
pointwise by the scaled resolvent weight

    chi_J(lam) <= 2 eta * Im (lam - (E + i eta))^{-1}
                = 2 eta^2 / ((lam - E)^2 + eta^2),

with equality at the endpoints.  Summing the weight product over ordered
distinct eigenvalue-index pairs therefore dominates N(N-1), where N is
the eigenvalue count in J.  The same quantity has two matrix forms built
from M = Im R(E + i eta):

    (2 eta)^2 [ (tr M)^2 - tr(M^2) ]                  (trace form)
    (2 eta)^2 sum_{x,y} [ M_xx M_yy - M_xy M_yx ]     (determinant form)

chain_report() evaluates all of them per sample and checks the chain
N(N-1) <= pair sum and the trace/determinant identity.  Eigenvalues are
counted with numerical multiplicity as distinct indices; coincidences
within 1e-12 are still distinct indices.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .eigensolver import EigenDecomposition

# Relative tolerance of the trace-form == determinant-form identity.
CHAIN_IDENTITY_RTOL = 1e-8
# Principal 2x2 minors of Im R are nonnegative up to roundoff.
DET2_MIN_SUMMAND = -1e-12
# Roundoff guard on the mathematically strict pair-sum domination.
PAIR_SUM_GUARD = 1e-12


class ChainInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class Interval:
    """Closed interval [lower, upper] on the energy axis."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @classmethod
    def from_center(cls, center: float, half_width: float) -> "Interval":
        if half_width < 0:
            raise ValueError("half_width must be nonnegative")
        return cls(center - half_width, center + half_width)

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ChainReport:
    """Per-sample values of the counting/resolvent/determinant chain."""

    count: int
    factorial_moment: int
    resolvent_pair_sum: float
    trace_form: float
    determinant_form: float
    min_det2_summand: float
    interval: Interval

    def verify(self):
        if self.factorial_moment != self.count * (self.count - 1):
            raise ChainInvariantError("factorial moment inconsistent with count")
        slack = PAIR_SUM_GUARD * (1.0 + abs(self.resolvent_pair_sum))
        if self.factorial_moment > self.resolvent_pair_sum + slack:
            raise ChainInvariantError(
                f"N(N-1) = {self.factorial_moment} exceeds pair sum "
                f"{self.resolvent_pair_sum!r}"
            )
        tol = CHAIN_IDENTITY_RTOL * (1.0 + abs(self.trace_form))
        if abs(self.trace_form - self.determinant_form) > tol:
            raise ChainInvariantError(
                f"trace form {self.trace_form!r} and determinant form "
                f"{self.determinant_form!r} disagree beyond {tol:.3e}"
            )


def _eigenvalues(spectrum) -> np.ndarray:
    if isinstance(spectrum, EigenDecomposition):
        return spectrum.eigenvalues
    values = np.asarray(spectrum, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("expected a decomposition or a 1-d eigenvalue array")
    if np.any(np.diff(values) < 0):
        raise ValueError("eigenvalues must be sorted ascending")
    return values


def count_in_interval(spectrum, interval: Interval) -> int:
    """Number of eigenvalues in the closed interval."""
    values = _eigenvalues(spectrum)
    hi = int(np.searchsorted(values, interval.upper, side="right"))
    lo = int(np.searchsorted(values, interval.lower, side="left"))
    return hi - lo


def eigenvalues_in(spectrum, interval: Interval) -> np.ndarray:
    values = _eigenvalues(spectrum)
    hi = int(np.searchsorted(values, interval.upper, side="right"))
    lo = int(np.searchsorted(values, interval.lower, side="left"))
    return values[lo:hi]


def min_gap(spectrum, interval: Interval = None):
    """Smallest consecutive spacing inside the interval.

    Returns None when fewer than two eigenvalues fall in the interval.
    """
    values = _eigenvalues(spectrum)
    if interval is not None:
        values = eigenvalues_in(values, interval)
    if values.shape[0] < 2:
        return None
    return float(np.diff(values).min())


def green_function(decomposition: EigenDecomposition, z: complex, x: int, y: int) -> complex:
    """G(z; x, y) = sum_k v_k(x) v_k(y) / (lam_k - z), upper half-plane z."""
    if not np.imag(z) > 0:
        raise ValueError("green_function requires Im z > 0")
    v = decomposition.eigenvectors
    return complex(np.sum(v[x, :] * v[y, :] / (decomposition.eigenvalues - z)))


def im_resolvent_weights(eigenvalues: np.ndarray, energy: float, eta: float) -> np.ndarray:
    """Im (lam_k - (E + i eta))^{-1} = eta / ((lam_k - E)^2 + eta^2)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    diff = eigenvalues - energy
    return eta / (diff * diff + eta * eta)


def im_resolvent_trace(spectrum, energy: float, eta: float) -> float:
    """tr Im R(E + i eta), from eigenvalues alone."""
    return float(im_resolvent_weights(_eigenvalues(spectrum), energy, eta).sum())


def im_resolvent_matrix(decomposition: EigenDecomposition, energy: float, eta: float) -> np.ndarray:
    """The matrix Im R(E + i eta) = V diag(w) V^T."""
    w = im_resolvent_weights(decomposition.eigenvalues, energy, eta)
    v = decomposition.eigenvectors
    return (v * w) @ v.T


def det2_im_green_total(decomposition: EigenDecomposition, energy: float, eta: float) -> float:
    """Sum over ordered site pairs of the 2x2 Im-Green minors.

    Each minor is a principal 2x2 minor of the positive semidefinite
    matrix Im R, so every summand must be >= -1e-12; a smaller value
    signals a numerically broken decomposition and raises.
    """
    m = im_resolvent_matrix(decomposition, energy, eta)
    total, smallest = kernels.det2_total(m)
    if smallest < DET2_MIN_SUMMAND:
        raise ChainInvariantError(
            f"negative 2x2 minor {smallest!r} below {DET2_MIN_SUMMAND}"
        )
    return float(total)


def resolvent_pair_sum(spectrum, energy: float, eta: float) -> float:
    """Sum over ordered index pairs k != l of the products
    [2 eta Im(lam_k - z)^{-1}] [2 eta Im(lam_l - z)^{-1}], z = E + i eta."""
    u = 2.0 * eta * im_resolvent_weights(_eigenvalues(spectrum), energy, eta)
    return kernels.pair_sum(u)


def chain_report(decomposition: EigenDecomposition, interval: Interval) -> ChainReport:
    """Evaluate and verify the full per-sample chain on J = [E-eta, E+eta]."""
    eta = interval.half_width
    if not eta > 0:
        raise ValueError("chain_report needs an interval of positive width")
    energy = interval.center
    n_in = count_in_interval(decomposition, interval)
    pair = resolvent_pair_sum(decomposition, energy, eta)
    m = im_resolvent_matrix(decomposition, energy, eta)
    scale = (2.0 * eta) ** 2
    trace_form = scale * (np.trace(m) ** 2 - np.einsum("ij,ji->", m, m))
    det_total, det_min = kernels.det2_total(m)
    report = ChainReport(
        count=n_in,
        factorial_moment=n_in * (n_in - 1),
        resolvent_pair_sum=pair,
        trace_form=float(trace_form),
        determinant_form=float(scale * det_total),
        min_det2_summand=float(det_min),
        interval=interval,
    )
    if det_min < DET2_MIN_SUMMAND:
        raise ChainInvariantError(
            f"negative 2x2 minor {det_min!r} below {DET2_MIN_SUMMAND}"
        )
    report.verify()
    return report


def det2_im_green_pair(decomposition: EigenDecomposition, energy: float, eta: float,
                       x: int, y: int) -> float:
    """Single 2x2 Im-Green minor at sites (x, y), without the (2 eta)^2 factor."""
    w = im_resolvent_weights(decomposition.eigenvalues, energy, eta)
    v = decomposition.eigenvectors
    axx = float(np.sum(w * v[x, :] * v[x, :]))
    ayy = float(np.sum(w * v[y, :] * v[y, :]))
    axy = float(np.sum(w * v[x, :] * v[y, :]))
    return axx * ayy - axy * axy
