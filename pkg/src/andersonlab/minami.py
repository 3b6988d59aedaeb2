"""Monte Carlo verification of eigenvalue-counting bounds.

The central inequality for a box with N_s = n^d sites and disorder
density sup rho_sup is the pair-counting (Minami) bound

    P{ at least 2 eigenvalues in J } <= E{ N_J (N_J - 1) }
                                     <= pi^2 rho_sup^2 |J|^2 N_s^2.

Every occurrence of the length scale in the closed-form bounds is
instantiated as the site count n per side, so the L^{2d} factor is
exactly the squared number of sites N_s^2 = n^{2d} (it arises from a
double sum over site pairs).

From the pair bound, covering a bounded interval I with overlapping
tiles of width 2 n^{-q} gives the spacing bound: the probability that
some subinterval of I with width <= n^{-q} holds two eigenvalues is at
most

    8 pi^2 rho_sup^2 (|I| + 1) n^{-q + 2d},      q > 2d.

That event is decided exactly by the consecutive-gap test (two adjacent
eigenvalues inside I closer than n^{-q}); an exhaustive scan over
eigenvalue pairs is kept as a cross-check.

Scale schedule: on boxes of side n_k = 2^k the spacing bound decays
geometrically in k while the truncation window of a degenerate decaying
pair shrinks faster than n_k^{-q} whenever 2d < q < beta - d/2, so a
single eigenvalue with two independent beta-decaying eigenfunctions
would eventually contradict the spacing event at every large scale.
incompatibility_demo tabulates both sides at finite k.

All experiments draw per-trial seeds with ensemble.derive_seed and
aggregate in trial-index order, so results are independent of worker
count and execution order.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import run_trials
from .eigensolver import symmetric_eigen, symmetric_eigenvalues
from .lattice import BoxGeometry, PotentialSpec, build_hamiltonian, sample_potential
from .spectral import (
    Interval,
    chain_report,
    count_in_interval,
    det2_im_green_pair,
    eigenvalues_in,
    min_gap,
)
from .stats import BoundComparison, mean_comparison, proportion_comparison

PI2 = math.pi * math.pi


# ----------------------------------------------------------------------
# closed-form bounds
# ----------------------------------------------------------------------

def minami_bound(interval: Interval, geometry: BoxGeometry, density_sup: float) -> float:
    """pi^2 rho_sup^2 |J|^2 (n^d)^2."""
    sites = geometry.volume
    return PI2 * density_sup**2 * interval.width**2 * sites**2


def spacing_bound(interval: Interval, q: float, geometry: BoxGeometry,
                  density_sup: float) -> float:
    """8 pi^2 rho_sup^2 (|I| + 1) n^{-q + 2d}, n = sites per side."""
    n = geometry.sites_per_side
    d = geometry.dimension
    return 8.0 * PI2 * density_sup**2 * (interval.width + 1.0) * float(n) ** (-q + 2 * d)


def pair_det_bound(density_sup: float) -> float:
    """Per-site-pair ceiling pi^2 rho_sup^2 on the mean 2x2 Im-Green minor."""
    return PI2 * density_sup**2


# ----------------------------------------------------------------------
# configurations
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MinamiExperimentConfig:
    geometry: BoxGeometry
    potential: PotentialSpec
    interval: Interval
    samples: int
    master_seed: int
    eta_grid: tuple = None          # resolvent-form checks (chain experiment)
    halfwidth_sweep: tuple = None   # extra half-widths counted per trial

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.interval.width > 0:
            raise ValueError("interval J must be nonempty")


@dataclass(frozen=True)
class Lemma2Config:
    interval: Interval
    q: float
    geometry: BoxGeometry
    potential: PotentialSpec
    samples: int
    master_seed: int

    def __post_init__(self):
        if not self.q > 2 * self.geometry.dimension:
            raise ValueError(
                f"spacing exponent q = {self.q} must exceed 2d = "
                f"{2 * self.geometry.dimension}"
            )


# ----------------------------------------------------------------------
# counting experiments (double occupancy / factorial moment)
# ----------------------------------------------------------------------

def _counting_trial_fn(config: MinamiExperimentConfig):
    sweep = tuple(config.halfwidth_sweep or ())
    center = config.interval.center

    def trial(index, seed):
        v = sample_potential(config.potential, config.geometry, seed)
        h = build_hamiltonian(config.geometry, v)
        eigs = symmetric_eigenvalues(h)
        n_in = count_in_interval(eigs, config.interval)
        fields = {
            "count_in_J": n_in,
            "min_gap_in_I": min_gap(eigs),
            "factorial_moment": n_in * (n_in - 1),
        }
        if sweep:
            fields["sweep"] = [
                {
                    "halfwidth": hw,
                    "count": count_in_interval(
                        eigs, Interval.from_center(center, hw)
                    ),
                }
                for hw in sweep
            ]
        return fields

    return trial


def run_counting_experiment(config: MinamiExperimentConfig, workers: int = 1,
                            sink=None):
    """Shared engine of the double-occupancy and factorial-moment estimates.

    Returns (records, statistics): a Wilson comparison of P{N >= 2} and a
    normal-CI comparison of the mean factorial moment against the same
    pair-counting bound, plus one pair of rows per swept half-width.
    """
    records = run_trials(
        _counting_trial_fn(config), config.samples, config.master_seed,
        workers=workers, sink=sink,
    )
    bound = minami_bound(config.interval, config.geometry,
                         config.potential.density_sup)
    counts = np.array([r["count_in_J"] for r in records])
    moments = counts * (counts - 1)
    p_hat = float(np.mean(counts >= 2))
    moment_mean = float(moments.mean())
    stats = [
        proportion_comparison(
            "p_two_or_more", int(np.sum(counts >= 2)), config.samples,
            bound=bound, width=config.interval.width,
        ),
        mean_comparison(
            "factorial_moment_mean", moments, bound=bound,
            width=config.interval.width,
            sandwich={
                "p_two_or_more": p_hat,
                "factorial_moment_mean": moment_mean,
                "holds": p_hat <= moment_mean,
            },
        ),
    ]
    if config.halfwidth_sweep:
        for j, hw in enumerate(config.halfwidth_sweep):
            sub = Interval.from_center(config.interval.center, hw)
            sub_bound = minami_bound(sub, config.geometry,
                                     config.potential.density_sup)
            sub_counts = np.array([r["sweep"][j]["count"] for r in records])
            sub_moments = sub_counts * (sub_counts - 1)
            stats.append(proportion_comparison(
                f"p_two_or_more[halfwidth={hw:g}]",
                int(np.sum(sub_counts >= 2)), config.samples,
                bound=sub_bound, width=sub.width,
            ))
            stats.append(mean_comparison(
                f"factorial_moment_mean[halfwidth={hw:g}]", sub_moments,
                bound=sub_bound, width=sub.width,
            ))
    return records, stats


def estimate_double_occupancy(config: MinamiExperimentConfig,
                              workers: int = 1) -> BoundComparison:
    """Monte Carlo frequency of {N_J >= 2} against the pair-counting bound."""
    _, stats = run_counting_experiment(config, workers=workers)
    return stats[0]


def estimate_factorial_moment(config: MinamiExperimentConfig,
                              workers: int = 1) -> BoundComparison:
    """Mean of N_J (N_J - 1) against the same bound, with the empirical
    sandwich P{N >= 2} <= mean N(N-1) recorded alongside."""
    _, stats = run_counting_experiment(config, workers=workers)
    return stats[1]


# ----------------------------------------------------------------------
# expectation chain over an eta grid
# ----------------------------------------------------------------------

def _chain_trial_fn(config: MinamiExperimentConfig, etas, pair_sites):
    center = config.interval.center

    def trial(index, seed):
        v = sample_potential(config.potential, config.geometry, seed)
        h = build_hamiltonian(config.geometry, v)
        dec = symmetric_eigen(h)
        rows = []
        for eta in etas:
            rep = chain_report(dec, Interval.from_center(center, eta))
            rows.append({
                "eta": eta,
                "count": rep.count,
                "factorial_moment": rep.factorial_moment,
                "resolvent_pair_sum": rep.resolvent_pair_sum,
                "trace_form": rep.trace_form,
                "determinant_form": rep.determinant_form,
                "min_det2_summand": rep.min_det2_summand,
                "pair_det2": det2_im_green_pair(dec, center, eta, *pair_sites),
            })
        n_in = count_in_interval(dec, config.interval)
        return {
            "count_in_J": n_in,
            "min_gap_in_I": min_gap(dec),
            "factorial_moment": n_in * (n_in - 1),
            "chain": rows,
        }

    return trial


@dataclass(frozen=True)
class ChainExpectationRow:
    eta: float
    mean_factorial_moment: float
    mean_resolvent_pair_sum: float
    mean_trace_form: float
    mean_determinant_form: float
    mean_pair_det2: float
    ceiling: float
    chain_holds: bool


def center_pair_sites(geometry: BoxGeometry):
    """Linear indices of the origin site and its +1 neighbor on the last axis."""
    origin = geometry.index_of(np.zeros(geometry.dimension, dtype=np.int64))
    return origin, origin + 1


def run_chain_experiment(config: MinamiExperimentConfig, workers: int = 1,
                         sink=None):
    """Per-eta Monte Carlo means of the counting/resolvent/determinant chain.

    The eta grid always contains the anchored value |J|/2.  Returns
    (records, statistics, rows) where rows hold the per-eta means, the
    (2 eta)^2 pi^2 rho_sup^2 N_s^2 ceiling, and whether the mean chain
    mean N(N-1) <= mean pair sum <= mean determinant form held (the
    middle link up to the identity's roundoff tolerance).
    """
    etas = list(config.eta_grid or ())
    anchor = config.interval.half_width
    if not any(abs(e - anchor) <= 1e-15 * max(1.0, anchor) for e in etas):
        etas.append(anchor)
    pair_sites = center_pair_sites(config.geometry)
    records = run_trials(
        _chain_trial_fn(config, tuple(etas), pair_sites),
        config.samples, config.master_seed, workers=workers, sink=sink,
    )
    rho = config.potential.density_sup
    sites = config.geometry.volume
    rows = []
    stats = []
    for j, eta in enumerate(etas):
        fm = np.array([r["chain"][j]["factorial_moment"] for r in records], dtype=float)
        pair = np.array([r["chain"][j]["resolvent_pair_sum"] for r in records])
        trace = np.array([r["chain"][j]["trace_form"] for r in records])
        det = np.array([r["chain"][j]["determinant_form"] for r in records])
        pdet = np.array([r["chain"][j]["pair_det2"] for r in records])
        ceiling = (2.0 * eta) ** 2 * PI2 * rho**2 * sites**2
        mean_fm = float(fm.mean())
        mean_pair = float(pair.mean())
        mean_det = float(det.mean())
        chain_holds = (
            mean_fm <= mean_pair * (1.0 + 1e-12) + 1e-12
            and mean_pair <= mean_det * (1.0 + 1e-8) + 1e-12
        )
        rows.append(ChainExpectationRow(
            eta=eta,
            mean_factorial_moment=mean_fm,
            mean_resolvent_pair_sum=mean_pair,
            mean_trace_form=float(trace.mean()),
            mean_determinant_form=mean_det,
            mean_pair_det2=float(pdet.mean()),
            ceiling=ceiling,
            chain_holds=chain_holds,
        ))
        stats.append(mean_comparison(
            f"determinant_form_mean[eta={eta:g}]", det, bound=ceiling,
            chain_holds=chain_holds,
        ))
        stats.append(mean_comparison(
            f"pair_det2_mean[eta={eta:g}]", pdet, bound=pair_det_bound(rho),
            sites=list(pair_sites),
        ))
        stats.append(mean_comparison(
            f"factorial_moment_mean[eta={eta:g}]", fm,
            bound=(2.0 * eta) ** 2 * PI2 * rho**2 * sites**2,
        ))
    return records, stats, rows


def expectation_chain(config: MinamiExperimentConfig, workers: int = 1):
    """Per-eta table of chain means; see run_chain_experiment."""
    _, _, rows = run_chain_experiment(config, workers=workers)
    return rows


# ----------------------------------------------------------------------
# covering construction
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CoveringResult:
    count: int
    count_bound: float
    passes_count_bound: bool
    tile_halfwidth: float
    tile_step: float
    tile_centers: np.ndarray
    probe_failures: int
    probes: int


def covering_count(interval: Interval, q: float, sites: int,
                   probes: int = 10_000, probe_seed: int = 20210001) -> CoveringResult:
    """Tile the interval with 2(floor(n^q |I| / 2) + 1) half-overlapping
    tiles of width 2 n^{-q} and verify the covering property on probes.

    passes_count_bound checks count <= n^q |I| + 2.  Probe subintervals
    of width <= n^{-q} are drawn uniformly inside I (plus the two edge
    positions); a failure means no tile contains the probe.
    """
    if sites < 1:
        raise ValueError("sites must be >= 1")
    scale = float(sites) ** q
    x = scale * interval.width
    count = 2 * (int(math.floor(x / 2.0)) + 1)
    bound = x + 2.0
    step = float(sites) ** (-q)
    centers = interval.lower + step * np.arange(count)
    failures = 0
    total_probes = 0
    if interval.width > 0:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(probe_seed)))
        lengths = step * rng.random(probes)
        starts = interval.lower + (interval.width - lengths) * rng.random(probes)
        starts = np.concatenate([starts, [interval.lower, interval.upper - min(step, interval.width)]])
        lengths = np.concatenate([lengths, [min(step, interval.width)] * 2])
        k0 = np.floor((starts - interval.lower) / step).astype(np.int64)
        ok = np.zeros(starts.shape[0], dtype=bool)
        for offset in (-1, 0, 1):
            k = np.clip(k0 + offset, 0, count - 1)
            lo = centers[k] - step
            hi = centers[k] + step
            ok |= (lo <= starts) & (starts + lengths <= hi)
        failures = int(np.sum(~ok))
        total_probes = int(starts.shape[0])
    return CoveringResult(
        count=count,
        count_bound=bound,
        passes_count_bound=count <= bound,
        tile_halfwidth=step,
        tile_step=step,
        tile_centers=centers,
        probe_failures=failures,
        probes=total_probes,
    )


# ----------------------------------------------------------------------
# spacing event (close pair somewhere in I)
# ----------------------------------------------------------------------

def gap_event_decision(eigenvalues, interval: Interval, threshold: float) -> bool:
    """True when two consecutive eigenvalues inside I are <= threshold apart."""
    inside = eigenvalues_in(eigenvalues, interval)
    if inside.shape[0] < 2:
        return False
    return bool(np.min(np.diff(inside)) <= threshold)


def scan_event_decision(eigenvalues, interval: Interval, threshold: float) -> bool:
    """Same event by exhaustive scan over eigenvalue pairs spanning a
    candidate subinterval [lam_i, lam_j] of I; cross-check of the gap test."""
    inside = eigenvalues_in(eigenvalues, interval)
    k = inside.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            if inside[j] - inside[i] <= threshold:
                return True
    return False


def _lemma2_trial_fn(config: Lemma2Config, threshold: float):
    def trial(index, seed):
        v = sample_potential(config.potential, config.geometry, seed)
        h = build_hamiltonian(config.geometry, v)
        eigs = symmetric_eigenvalues(h)
        gap_event = gap_event_decision(eigs, config.interval, threshold)
        scan_event = scan_event_decision(eigs, config.interval, threshold)
        n_in = count_in_interval(eigs, config.interval)
        return {
            "count_in_J": n_in,
            "min_gap_in_I": min_gap(eigs, config.interval),
            "factorial_moment": n_in * (n_in - 1),
            "close_pair_event": gap_event,
            "close_pair_event_scan": scan_event,
            "threshold": threshold,
        }

    return trial


def run_lemma2_experiment(config: Lemma2Config, workers: int = 1, sink=None):
    """Frequency of the close-pair event against the spacing bound.

    Both event decisions run on every sample; the statistics include the
    number of samples where they disagreed (expected 0).
    """
    threshold = float(config.geometry.sites_per_side) ** (-config.q)
    records = run_trials(
        _lemma2_trial_fn(config, threshold), config.samples,
        config.master_seed, workers=workers, sink=sink,
    )
    events = np.array([r["close_pair_event"] for r in records])
    scans = np.array([r["close_pair_event_scan"] for r in records])
    disagreements = int(np.sum(events != scans))
    bound = spacing_bound(config.interval, config.q, config.geometry,
                          config.potential.density_sup)
    stats = [proportion_comparison(
        "p_close_pair", int(events.sum()), config.samples, bound=bound,
        threshold=threshold, decision_disagreements=disagreements,
    )]
    return records, stats


def lemma2_event_frequency(config: Lemma2Config, workers: int = 1) -> BoundComparison:
    _, stats = run_lemma2_experiment(config, workers=workers)
    return stats[0]


# ----------------------------------------------------------------------
# minimal-gap ensembles (finite-volume shadow of simplicity)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GapExperimentConfig:
    geometry: BoxGeometry
    potential: PotentialSpec
    samples: int
    master_seed: int
    interval: Interval = None       # None: whole spectrum

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


SIMPLICITY_GAP = 1e-12


def _gap_trial_fn(config: GapExperimentConfig):
    def trial(index, seed):
        v = sample_potential(config.potential, config.geometry, seed)
        h = build_hamiltonian(config.geometry, v)
        eigs = symmetric_eigenvalues(h)
        if config.interval is None:
            n_in = eigs.shape[0]
            gap = min_gap(eigs)
        else:
            n_in = count_in_interval(eigs, config.interval)
            gap = min_gap(eigs, config.interval)
        return {
            "count_in_J": n_in,
            "min_gap_in_I": gap,
            "factorial_moment": n_in * (n_in - 1),
        }

    return trial


def run_gap_experiment(config: GapExperimentConfig, workers: int = 1, sink=None):
    """Distribution of the smallest level spacing across the ensemble.

    Statistics: the smallest observed gap, and how many samples fell at
    or below the simplicity threshold 1e-12 or had fewer than two
    eigenvalues in the window (both expected 0 for disordered boxes).
    """
    records = run_trials(
        _gap_trial_fn(config), config.samples, config.master_seed,
        workers=workers, sink=sink,
    )
    gaps = [r["min_gap_in_I"] for r in records]
    defined = np.array([g for g in gaps if g is not None], dtype=float)
    fewer = sum(1 for g in gaps if g is None)
    smallest = float(defined.min()) if defined.size else math.nan
    below = int(np.sum(defined <= SIMPLICITY_GAP)) if defined.size else 0
    stats = [
        BoundComparison(
            name="min_gap_min", n=config.samples, empirical=smallest,
            ci_low=smallest, ci_high=smallest, bound=None,
            extra={"simplicity_threshold": SIMPLICITY_GAP},
        ),
        BoundComparison(
            name="samples_at_or_below_threshold", n=config.samples,
            empirical=float(below), ci_low=float(below), ci_high=float(below),
            bound=None,
        ),
        BoundComparison(
            name="samples_with_fewer_than_two", n=config.samples,
            empirical=float(fewer), ci_low=float(fewer), ci_high=float(fewer),
            bound=None,
        ),
    ]
    return records, stats


# ----------------------------------------------------------------------
# finite-scale incompatibility table
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IncompatRow:
    k: int
    scale: int
    window_width: float
    threshold: float
    window_fits: bool
    bound: float
    empirical: float
    ci_low: float
    ci_high: float
    violated: bool
    bound_tail_sum: float


@dataclass(frozen=True)
class IncompatTable:
    beta: float
    q: float
    dimension: int
    c: float
    rows: tuple = field(default_factory=tuple)

    @property
    def any_violated(self) -> bool:
        return any(r.violated for r in self.rows)


def incompatibility_demo(beta: float, q: float, k_max: int,
                         potential: PotentialSpec,
                         dimension: int = 1,
                         interval: Interval = None,
                         samples: int = 200,
                         master_seed: int = 42,
                         c: float = 1.0,
                         k_min: int = 1,
                         workers: int = 1) -> IncompatTable:
    """Tabulate, on the scale schedule n_k = 2^k, the shrinking truncation
    window 2 c n_k^{-(beta - d/2)} of a degenerate decaying pair against
    the spacing threshold n_k^{-q}, with the spacing-event probability and
    its bound at each scale.

    Requires 2d < q < beta - d/2 (so the window eventually fits under the
    threshold while the bound column stays summable in k: consecutive
    bounds shrink by the exact factor 2^{-(q - 2d)}).
    """
    d = dimension
    if not beta > 2.5 * d:
        raise ValueError(f"need beta > 5d/2 = {2.5 * d}, got beta = {beta}")
    if not (2 * d < q < beta - 0.5 * d):
        raise ValueError(
            f"need 2d < q < beta - d/2, i.e. {2 * d} < q < {beta - 0.5 * d}, "
            f"got q = {q}"
        )
    if interval is None:
        interval = Interval(-1.0, 1.0)
    if k_max < k_min:
        raise ValueError("k_max must be >= k_min")
    ks = list(range(k_min, k_max + 1))
    bounds = []
    results = []
    for k in ks:
        n = 2 ** k
        geometry = BoxGeometry(dimension=d, sites_per_side=n)
        cfg = Lemma2Config(
            interval=interval, q=q, geometry=geometry, potential=potential,
            samples=samples, master_seed=derive_scale_seed(master_seed, k),
        )
        comparison = lemma2_event_frequency(cfg, workers=workers)
        bounds.append(comparison.bound)
        results.append(comparison)
    rows = []
    for pos, k in enumerate(ks):
        n = 2 ** k
        width = 2.0 * c * float(n) ** (-(beta - 0.5 * d))
        threshold = float(n) ** (-q)
        comparison = results[pos]
        rows.append(IncompatRow(
            k=k,
            scale=n,
            window_width=width,
            threshold=threshold,
            window_fits=width <= threshold,
            bound=comparison.bound,
            empirical=comparison.empirical,
            ci_low=comparison.ci_low,
            ci_high=comparison.ci_high,
            violated=comparison.violated,
            bound_tail_sum=float(sum(bounds[pos:])),
        ))
    return IncompatTable(beta=beta, q=q, dimension=d, c=c, rows=tuple(rows))


def derive_scale_seed(master_seed: int, k: int) -> int:
    """Distinct master seed per scale of the incompatibility table."""
    from .ensemble import derive_seed

    return derive_seed(master_seed, 1_000_000 + k)
