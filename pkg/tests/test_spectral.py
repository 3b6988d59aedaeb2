import numpy as np
import pytest

from andersonlab.eigensolver import EigenDecomposition, symmetric_eigen
from andersonlab.lattice import (
    BoxGeometry,
    PotentialSpec,
    build_hamiltonian,
    sample_potential,
)
from andersonlab.spectral import (
    ChainInvariantError,
    ChainReport,
    Interval,
    chain_report,
    count_in_interval,
    det2_im_green_pair,
    det2_im_green_total,
    green_function,
    im_resolvent_matrix,
    im_resolvent_trace,
    min_gap,
    resolvent_pair_sum,
)

from oracles import (
    box_spectrum,
    direct_green_column,
    direct_im_resolvent,
    sturm_count_in_closed,
)


def disordered(n=30, seed=1, d=1):
    g = BoxGeometry(d, n)
    v = sample_potential(PotentialSpec.uniform(-2, 2), g, seed)
    return build_hamiltonian(g, v)


def test_interval_basics():
    j = Interval(-0.5, 1.5)
    assert j.center == 0.5 and j.half_width == 1.0 and j.width == 2.0
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    j2 = Interval.from_center(0.0, 0.25)
    assert (j2.lower, j2.upper) == (-0.25, 0.25)


def test_count_closed_endpoints():
    eigs = np.array([0.0, 0.5, 1.0])
    assert count_in_interval(eigs, Interval(0.4, 1.1)) == 2
    assert count_in_interval(eigs, Interval(0.5, 1.0)) == 2  # both endpoints in
    assert count_in_interval(eigs, Interval(10.0, 11.0)) == 0
    assert count_in_interval(eigs, Interval(-5.0, 5.0)) == 3


def test_count_against_sturm_oracle():
    n = 40
    g = BoxGeometry(1, n)
    v = sample_potential(PotentialSpec.uniform(-2, 2), g, 7)
    h = build_hamiltonian(g, v)
    eigs = symmetric_eigen(h).eigenvalues
    off = np.full(n - 1, -1.0)
    for lo, hi in ((-1.0, 1.0), (0.0, 0.3), (-4.0, 4.0), (2.0, 2.5)):
        assert count_in_interval(eigs, Interval(lo, hi)) == \
            sturm_count_in_closed(v, off, lo, hi)


def test_count_monotone_in_interval():
    eigs = symmetric_eigen(disordered(25, 3)).eigenvalues
    rng = np.random.default_rng(0)
    for _ in range(50):
        lo, hi = np.sort(rng.uniform(-4, 4, 2))
        pad = rng.uniform(0, 1, 2)
        inner = Interval(lo, hi)
        outer = Interval(lo - pad[0], hi + pad[1])
        assert count_in_interval(eigs, inner) <= count_in_interval(eigs, outer)


def test_min_gap():
    eigs = np.array([0.0, 0.5, 1.0])
    assert min_gap(eigs, Interval(-1.0, 2.0)) == 0.5
    assert min_gap(eigs, Interval(0.4, 0.6)) is None
    assert min_gap(np.array([2.0]), None) is None


def test_min_gap_degenerate_free_2d():
    g = BoxGeometry(2, 3)
    h = build_hamiltonian(g, np.zeros(9))
    eigs = symmetric_eigen(h).eigenvalues
    oracle = box_spectrum(2, 3)
    assert np.min(np.diff(oracle)) == 0.0
    assert min_gap(eigs) <= 1e-12


def test_green_function_1x1():
    dec = EigenDecomposition(np.array([0.0]), np.eye(1))
    lam = 0.0
    g = green_function(dec, lam + 1j, 0, 0)
    assert g == pytest.approx(1j, abs=1e-15)


def test_green_function_rejects_lower_half_plane():
    dec = EigenDecomposition(np.array([0.0]), np.eye(1))
    with pytest.raises(ValueError):
        green_function(dec, 0.5 - 1j, 0, 0)
    with pytest.raises(ValueError):
        green_function(dec, 0.5, 0, 0)


def test_green_function_diagonal_positive_imag():
    dec = symmetric_eigen(disordered(12, 5))
    for x in range(12):
        assert green_function(dec, 0.1 + 0.05j, x, x).imag > 0


def test_green_function_against_direct_solve():
    h = disordered(4, 9)
    dec = symmetric_eigen(h)
    z = 0.2 + 0.3j
    for y in range(4):
        col = direct_green_column(h, z, y)
        for x in range(4):
            assert green_function(dec, z, x, y) == pytest.approx(col[x], abs=1e-10)


def test_im_resolvent_trace_values():
    dec1 = EigenDecomposition(np.array([0.0]), np.eye(1))
    assert im_resolvent_trace(dec1, 0.0, 1.0) == pytest.approx(1.0, abs=0)
    assert im_resolvent_trace(dec1, 1.0, 1.0) == pytest.approx(0.5, abs=0)
    with pytest.raises(ValueError):
        im_resolvent_trace(dec1, 0.0, 0.0)


def test_im_resolvent_trace_equals_green_diagonal_sum():
    h = disordered(5, 4)
    dec = symmetric_eigen(h)
    e, eta = 0.3, 0.07
    total = sum(green_function(dec, e + 1j * eta, x, x).imag for x in range(5))
    assert im_resolvent_trace(dec, e, eta) == pytest.approx(total, abs=1e-10)


def test_im_resolvent_matrix_psd_and_matches_inverse():
    h = disordered(20, 8)
    dec = symmetric_eigen(h)
    for eta in (1.0, 0.05):
        m = im_resolvent_matrix(dec, 0.1, eta)
        direct = direct_im_resolvent(h, 0.1, eta)
        assert np.abs(m - direct).max() <= 1e-10 * (1 + np.abs(direct).max())
        assert np.linalg.eigvalsh((m + m.T) / 2).min() >= -1e-10


def test_det2_total_1x1_is_zero():
    dec = EigenDecomposition(np.array([0.7]), np.eye(1))
    assert det2_im_green_total(dec, 0.0, 0.5) == 0.0


def test_det2_total_matches_trace_oracle():
    h = disordered(6, 10)
    dec = symmetric_eigen(h)
    for eta in (1.0, 0.1):
        total = det2_im_green_total(dec, 0.0, eta)
        m = direct_im_resolvent(h, 0.0, eta)
        oracle = np.trace(m) ** 2 - np.trace(m @ m)
        assert total == pytest.approx(oracle, rel=1e-8)


def test_det2_pair_matches_total_entries():
    h = disordered(6, 12)
    dec = symmetric_eigen(h)
    m = im_resolvent_matrix(dec, 0.0, 0.2)
    x, y = 2, 4
    expected = m[x, x] * m[y, y] - m[x, y] * m[y, x]
    assert det2_im_green_pair(dec, 0.0, 0.2, x, y) == pytest.approx(expected, rel=1e-10)


def test_pointwise_indicator_bound():
    # chi_J(lam) <= 2 eta^2 / ((lam-E)^2 + eta^2) on spectra and a grid of J
    eigs = symmetric_eigen(disordered(30, 6)).eigenvalues
    for e in (-1.3, 0.0, 0.77):
        for eta in (1.0, 0.1, 0.013):
            j = Interval.from_center(e, eta)
            weights = 2.0 * eta * eta / ((eigs - e) ** 2 + eta * eta)
            indicator = ((eigs >= j.lower) & (eigs <= j.upper)).astype(float)
            assert np.all(indicator <= weights * (1 + 1e-12))


def test_chain_report_single_eigenvalue():
    dec = EigenDecomposition(np.array([0.0]), np.eye(1))
    rep = chain_report(dec, Interval.from_center(0.0, 0.5))
    assert rep.count == 1
    assert rep.factorial_moment == 0
    assert rep.resolvent_pair_sum == 0.0
    assert rep.determinant_form == 0.0


def test_chain_report_synthetic_degenerate_pair():
    # two eigenvalues exactly at the center: each weight is 2, the ordered
    # pair sum is 2 * (2*2) = 8, and N(N-1) = 2
    vecs = np.eye(2)
    dec = EigenDecomposition(np.array([0.4, 0.4]), vecs)
    rep = chain_report(dec, Interval.from_center(0.4, 0.01))
    assert rep.count == 2
    assert rep.factorial_moment == 2
    assert rep.resolvent_pair_sum == pytest.approx(8.0, abs=1e-12)
    assert rep.factorial_moment <= rep.resolvent_pair_sum


def test_chain_report_disordered_sample():
    h = disordered(30, 14)
    dec = symmetric_eigen(h)
    rep = chain_report(dec, Interval.from_center(0.0, 0.2))
    rep.verify()
    assert rep.factorial_moment <= rep.resolvent_pair_sum + 1e-12
    assert rep.min_det2_summand >= -1e-12
    # pair sum and trace form are two routes to the same number
    assert rep.resolvent_pair_sum == pytest.approx(rep.trace_form, rel=1e-8)


def test_chain_report_rejects_zero_width():
    dec = EigenDecomposition(np.array([0.0]), np.eye(1))
    with pytest.raises(ValueError):
        chain_report(dec, Interval(0.0, 0.0))


def test_chain_invariant_error_message():
    rep = ChainReport(
        count=3, factorial_moment=6, resolvent_pair_sum=1.0,
        trace_form=1.0, determinant_form=1.0, min_det2_summand=0.0,
        interval=Interval(-1, 1),
    )
    with pytest.raises(ChainInvariantError):
        rep.verify()


def test_resolvent_pair_sum_matches_weights():
    eigs = np.array([-1.0, 0.0, 2.0])
    e, eta = 0.0, 0.5
    u = 2 * eta * eta / ((eigs - e) ** 2 + eta**2)
    expected = sum(
        u[k] * u[l] for k in range(3) for l in range(3) if k != l
    )
    assert resolvent_pair_sum(eigs, e, eta) == pytest.approx(expected, rel=1e-12)
