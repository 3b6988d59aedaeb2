"""Finite-volume Anderson model laboratory.

Builds -Delta + V box Hamiltonians with iid disorder, diagonalizes them
exactly with an in-house symmetric eigensolver (numba-accelerated, with
a pure-numpy fallback), and verifies eigenvalue-counting inequalities,
the resolvent/determinant pair identities, the covering/spacing bound,
and the deterministic two-eigenfunction truncation argument, per sample
and by reproducible Monte Carlo.
"""

from .eigensolver import (
    EigenConvergenceError,
    EigenDecomposition,
    residual_report,
    solve_tridiagonal,
    symmetric_eigen,
    symmetric_eigenvalues,
    tridiagonalize,
)
from .ensemble import derive_seed, run_trials
from .harness import EnsembleConfig, execute, run_ensemble
from .kernels import BACKEND, BACKEND_ENV, USING_NUMBA
from .lattice import (
    BoxGeometry,
    PotentialSpec,
    build_hamiltonian,
    build_splitting,
    enumerate_sites,
    japanese_bracket,
    sample_potential,
)
from .minami import (
    GapExperimentConfig,
    Lemma2Config,
    MinamiExperimentConfig,
    covering_count,
    estimate_double_occupancy,
    estimate_factorial_moment,
    expectation_chain,
    incompatibility_demo,
    lemma2_event_frequency,
    minami_bound,
    spacing_bound,
)
from .spectral import (
    ChainReport,
    Interval,
    chain_report,
    count_in_interval,
    det2_im_green_total,
    green_function,
    im_resolvent_trace,
    min_gap,
)
from .two_eigenfunctions import (
    DecayCertificate,
    PairInstance,
    SpanPair,
    TruncationConfig,
    anderson_proxy_instance,
    boundary_defect,
    certify_decay,
    projection_argument,
    span_defect,
    synthetic_degenerate_instance,
    truncation_experiment,
    truncation_norms,
)

__version__ = "0.1.0"
