"""Experiment configuration, dispatch, and persistence.

Ensemble experiments stream one JSON object per trial to a .jsonl file
(append-only, each line self-contained) and then write a summary JSON
whose bounds are all recomputable from the echoed config.  Trial records
carry the wall-clock field elapsed_ms and summaries carry runtime_ms;
those are the only nondeterministic fields, and canonical_*_bytes strip
them so byte-level comparisons across reruns and worker counts work.

Table experiments (lemma1, incompat) export CSV.
"""

import csv
import json
import math
import os
import time
from dataclasses import dataclass, fields

import numpy as np

from .eigensolver import check_decomposition, symmetric_eigen
from .lattice import BoxGeometry, PotentialSpec, build_hamiltonian
from .minami import (
    GapExperimentConfig,
    Lemma2Config,
    MinamiExperimentConfig,
    covering_count,
    incompatibility_demo,
    run_chain_experiment,
    run_counting_experiment,
    run_gap_experiment,
    run_lemma2_experiment,
)
from .spectral import Interval
from .two_eigenfunctions import (
    TruncationConfig,
    anderson_proxy_instance,
    synthetic_degenerate_instance,
    truncation_experiment,
)

WORKERS_ENV = "ANDERSON_LAB_WORKERS"

KINDS = (
    "minami", "factorial-moment", "chain", "lemma2", "lemma1",
    "gaps", "solver-validate", "covering", "incompat",
)

_ENSEMBLE_KINDS = ("minami", "factorial-moment", "chain", "lemma2", "gaps")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return count


@dataclass(frozen=True)
class EnsembleConfig:
    """Lossless, serializable description of one experiment run."""

    kind: str
    dimension: int = 1
    sites: int = 100
    dist_family: str = "uniform"
    dist_a: float = -2.0
    dist_b: float = 2.0
    samples: int = 100
    master_seed: int = 42
    out: str = None
    workers: int = None
    center: float = 0.0
    halfwidth: float = None
    halfwidth_sweep: tuple = None
    interval_lo: float = None
    interval_hi: float = None
    q: float = None
    etas: tuple = None
    beta: float = None
    c: float = None
    schedule: tuple = None
    kmax: int = None
    mode: str = "synthetic"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.dimension < 1 or self.sites < 1 or self.samples < 1:
            raise ValueError("dimension, sites and samples must be positive")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        for name in ("halfwidth_sweep", "etas", "schedule"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, tuple):
                object.__setattr__(self, name, tuple(value))

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    # -- derived pieces -------------------------------------------------

    @property
    def geometry(self) -> BoxGeometry:
        return BoxGeometry(dimension=self.dimension, sites_per_side=self.sites)

    @property
    def potential(self) -> PotentialSpec:
        if self.dist_family != "uniform":
            raise ValueError(f"unsupported distribution {self.dist_family!r}")
        return PotentialSpec.uniform(self.dist_a, self.dist_b)

    @property
    def j_interval(self) -> Interval:
        if self.halfwidth is None:
            raise ValueError("this experiment needs --center/--halfwidth")
        return Interval.from_center(self.center, self.halfwidth)

    @property
    def i_interval(self) -> Interval:
        if self.interval_lo is None or self.interval_hi is None:
            raise ValueError("this experiment needs --interval lo,hi")
        return Interval(self.interval_lo, self.interval_hi)

    def effective_workers(self) -> int:
        return self.workers if self.workers is not None else default_workers()


@dataclass(frozen=True)
class RunResult:
    config: EnsembleConfig
    statistics: list
    records: list = None
    summary: dict = None
    table: object = None
    lines: tuple = ()

    @property
    def violated(self) -> bool:
        return any(s.violated for s in self.statistics)

    @property
    def exit_code(self) -> int:
        return 2 if self.violated else 0


# ----------------------------------------------------------------------
# json helpers
# ----------------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def json_line(record: dict) -> str:
    return json.dumps(record, default=_jsonable)


def dump_summary(summary: dict) -> str:
    return json.dumps(summary, indent=2, default=_jsonable)


def summary_path_for(jsonl_path: str) -> str:
    base = jsonl_path
    if base.endswith(".jsonl"):
        base = base[: -len(".jsonl")]
    return base + ".summary.json"


def canonical_summary_bytes(path: str) -> bytes:
    """Summary file bytes with the wall-clock field removed."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    data.pop("runtime_ms", None)
    return (json.dumps(data, indent=2) + "\n").encode("utf-8")


def canonical_jsonl_bytes(path: str) -> bytes:
    """JSONL bytes with per-trial wall-clock fields removed."""
    out = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            record.pop("elapsed_ms", None)
            out.append(json.dumps(record))
    return ("\n".join(out) + "\n").encode("utf-8")


# ----------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------

def _prepare_ensemble(config: EnsembleConfig):
    """Validate the config and return runner(sink) -> (records, stats).

    Validation happens here, before any output file is opened or any
    trial runs.
    """
    workers = config.effective_workers()
    if config.kind in ("minami", "factorial-moment"):
        cfg = MinamiExperimentConfig(
            geometry=config.geometry, potential=config.potential,
            interval=config.j_interval, samples=config.samples,
            master_seed=config.master_seed,
            halfwidth_sweep=config.halfwidth_sweep,
        )

        def runner(sink):
            records, stats = run_counting_experiment(cfg, workers=workers, sink=sink)
            if config.kind == "factorial-moment":
                stats = [stats[1], stats[0]] + stats[2:]
            return records, stats

        return runner
    if config.kind == "chain":
        if config.halfwidth is None:
            raise ValueError("chain needs --center/--halfwidth (anchored eta)")
        cfg = MinamiExperimentConfig(
            geometry=config.geometry, potential=config.potential,
            interval=config.j_interval, samples=config.samples,
            master_seed=config.master_seed, eta_grid=config.etas,
        )

        def runner(sink):
            records, stats, _rows = run_chain_experiment(cfg, workers=workers, sink=sink)
            return records, stats

        return runner
    if config.kind == "lemma2":
        cfg = Lemma2Config(
            interval=config.i_interval, q=config.q, geometry=config.geometry,
            potential=config.potential, samples=config.samples,
            master_seed=config.master_seed,
        )
        return lambda sink: run_lemma2_experiment(cfg, workers=workers, sink=sink)
    if config.kind == "gaps":
        interval = None
        if config.interval_lo is not None and config.interval_hi is not None:
            interval = config.i_interval
        cfg = GapExperimentConfig(
            geometry=config.geometry, potential=config.potential,
            samples=config.samples, master_seed=config.master_seed,
            interval=interval,
        )
        return lambda sink: run_gap_experiment(cfg, workers=workers, sink=sink)
    raise ValueError(f"{config.kind} is not an ensemble experiment")


def run_ensemble(config: EnsembleConfig) -> RunResult:
    """Run an ensemble experiment, streaming JSONL and writing a summary.

    Trials are seeded from (master_seed, index); aggregation folds in
    index order, so outputs do not depend on the worker count.  Invalid
    configs are rejected before anything runs or is written; on I/O
    failure the partial JSONL stays on disk and no summary is written.
    """
    runner = _prepare_ensemble(config)
    t0 = time.perf_counter()
    handle = None
    sink = None
    if config.out:
        handle = open(config.out, "w", encoding="utf-8")

        def sink(record):
            handle.write(json_line(record) + "\n")
            handle.flush()

    try:
        records, stats = runner(sink)
    finally:
        if handle is not None:
            handle.close()
    runtime_ms = (time.perf_counter() - t0) * 1e3
    primary = stats[0]
    # the echo identifies the experiment; the worker hint is a scheduling
    # detail that never affects outputs, so it is not part of the echo
    echo = config.to_dict()
    echo.pop("workers", None)
    summary = {
        "config": echo,
        "kind": config.kind,
        "samples": config.samples,
        "empirical": primary.empirical,
        "ci_low": primary.ci_low,
        "ci_high": primary.ci_high,
        "bound": primary.bound,
        "violated": any(s.violated for s in stats),
        "statistics": [s.to_dict() for s in stats],
        "runtime_ms": runtime_ms,
    }
    if config.out:
        with open(summary_path_for(config.out), "w", encoding="utf-8") as out:
            out.write(dump_summary(summary) + "\n")
    lines = [
        _format_statistic(s) for s in stats
    ]
    return RunResult(config=config, statistics=stats, records=records,
                     summary=summary, lines=tuple(lines))


def _format_statistic(s) -> str:
    bound = "-" if s.bound is None else f"{s.bound:.6g}"
    status = "VIOLATED" if s.violated else "ok"
    return (f"{s.name}: {s.empirical:.6g} "
            f"(99% CI {s.ci_low:.6g}..{s.ci_high:.6g}) vs bound {bound} [{status}]")


# ----------------------------------------------------------------------
# table/report experiments
# ----------------------------------------------------------------------

def run_covering(config: EnsembleConfig) -> RunResult:
    result = covering_count(config.i_interval, config.q, config.sites)
    from .stats import BoundComparison

    stats = [
        BoundComparison(
            name="covering_count", n=1,
            empirical=float(result.count),
            ci_low=float(result.count), ci_high=float(result.count),
            bound=result.count_bound,
        ),
        # any probe failure trips the violated flag
        BoundComparison(
            name="covering_probe_failures", n=result.probes,
            empirical=float(result.probe_failures),
            ci_low=float(result.probe_failures),
            ci_high=float(result.probe_failures),
            bound=0.5,
        ),
    ]
    lines = (
        f"covering: count {result.count} vs bound {result.count_bound:.6g} "
        f"({'ok' if result.passes_count_bound else 'VIOLATED'})",
        f"covering probes: {result.probes} checked, {result.probe_failures} failures",
    )
    return RunResult(config=config, statistics=stats, table=result, lines=lines)


def run_solver_validation(config: EnsembleConfig) -> RunResult:
    """V = 0 box spectrum against the analytic product of path spectra."""
    geometry = config.geometry
    h = build_hamiltonian(geometry, np.zeros(geometry.volume))
    t0 = time.perf_counter()
    dec = symmetric_eigen(h)
    elapsed = time.perf_counter() - t0
    n = geometry.sites_per_side
    path = -2.0 * np.cos(np.arange(1, n + 1) * math.pi / (n + 1))
    spectrum = path
    for _ in range(geometry.dimension - 1):
        spectrum = np.add.outer(spectrum, path).reshape(-1)
    spectrum = np.sort(spectrum)
    max_err = float(np.abs(dec.eigenvalues - spectrum).max())
    report = check_decomposition(h, dec)
    ok = max_err <= 1e-10
    from .stats import BoundComparison

    stat = BoundComparison(
        name="solver_max_spectrum_error", n=geometry.volume,
        empirical=max_err, ci_low=max_err, ci_high=max_err,
        bound=1e-10,
        extra={
            "max_residual": report.max_residual,
            "max_orthogonality_defect": report.max_orthogonality_defect,
            "trace_defect": report.trace_defect,
            "seconds": elapsed,
        },
    )
    lines = (
        f"solver-validate d={geometry.dimension} n={n}: max spectrum error "
        f"{max_err:.3e} (tolerance 1e-10), residual {report.max_residual:.3e}, "
        f"orthogonality {report.max_orthogonality_defect:.3e} "
        f"[{'ok' if ok else 'FAILED'}]",
    )
    return RunResult(config=config, statistics=[stat], lines=lines)


def run_lemma1(config: EnsembleConfig) -> RunResult:
    if config.beta is None or config.schedule is None:
        raise ValueError("lemma1 needs --beta and --schedule")
    host = config.geometry
    if config.mode == "synthetic":
        instance = synthetic_degenerate_instance(host, seed=config.master_seed)
    elif config.mode == "anderson":
        instance = anderson_proxy_instance(
            host, config.potential, config.master_seed,
            target_energy=config.center,
        )
    else:
        raise ValueError(f"unknown lemma1 mode {config.mode!r}")
    table = truncation_experiment(
        TruncationConfig(beta=config.beta, schedule=config.schedule, c=config.c),
        instance,
    )
    if config.out:
        write_truncation_csv(config.out, table)
    lines = [
        f"lemma1 mode={config.mode} measured_c={table.measured_c:.6g} "
        f"threshold_scale={table.threshold_scale}",
    ]
    for row in table.rows:
        lines.append(
            f"L={row.inner_sites}: eps={row.eps:.3e} count={row.count_in_window} "
            f"links 1..4=[{int(row.flag_truncation)}{int(row.flag_cross)}"
            f"{int(row.flag_defect)}{int(row.flag_span)}] "
            f"q={row.q_ratio:.3f} p={row.p_ratio:.3f} chain="
            f"{'ok' if row.chain_holds else 'failed'}"
        )
    return RunResult(config=config, statistics=[], table=table, lines=tuple(lines))


def run_incompat(config: EnsembleConfig) -> RunResult:
    if config.beta is None or config.q is None or config.kmax is None:
        raise ValueError("incompat needs --beta, --q and --kmax")
    interval = None
    if config.interval_lo is not None and config.interval_hi is not None:
        interval = config.i_interval
    table = incompatibility_demo(
        beta=config.beta, q=config.q, k_max=config.kmax,
        potential=config.potential, dimension=config.dimension,
        interval=interval, samples=config.samples,
        master_seed=config.master_seed,
        c=config.c if config.c is not None else 1.0,
        workers=config.effective_workers(),
    )
    if config.out:
        write_incompat_csv(config.out, table)
    from .stats import BoundComparison

    stats = [
        BoundComparison(
            name=f"p_close_pair[k={row.k}]", n=config.samples,
            empirical=row.empirical, ci_low=row.ci_low, ci_high=row.ci_high,
            bound=row.bound,
        )
        for row in table.rows
    ]
    lines = [
        f"incompat beta={table.beta} q={table.q} d={table.dimension}",
    ]
    for row in table.rows:
        lines.append(
            f"k={row.k} n={row.scale}: window {row.window_width:.3e} "
            f"{'<=' if row.window_fits else '>'} threshold {row.threshold:.3e}, "
            f"P(close pair) {row.empirical:.4g} <= bound {row.bound:.4g} "
            f"tail-sum {row.bound_tail_sum:.4g}"
        )
    return RunResult(config=config, statistics=stats, table=table,
                     lines=tuple(lines))


def write_truncation_csv(path: str, table) -> None:
    cols = [
        "inner_sites", "eps", "window_width", "count_in_window",
        "out_norm1", "out_norm2", "cross", "certificate_tail1",
        "certificate_tail2", "defect1", "defect2", "gamma1", "gamma2",
        "identity_gap", "leakage", "span", "q_ratio", "p_ratio",
        "c_required", "flag_truncation", "flag_cross", "flag_defect",
        "flag_span", "flag_q", "flag_p", "flag_count", "error",
    ]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for row in table.rows:
            writer.writerow([getattr(row, c) for c in cols])


def write_incompat_csv(path: str, table) -> None:
    cols = ["k", "scale", "window_width", "threshold", "window_fits",
            "bound", "empirical", "ci_low", "ci_high", "violated",
            "bound_tail_sum"]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for row in table.rows:
            writer.writerow([getattr(row, c) for c in cols])


def execute(config: EnsembleConfig) -> RunResult:
    """Dispatch any experiment kind."""
    if config.kind in _ENSEMBLE_KINDS:
        return run_ensemble(config)
    if config.kind == "covering":
        return run_covering(config)
    if config.kind == "solver-validate":
        return run_solver_validation(config)
    if config.kind == "lemma1":
        return run_lemma1(config)
    if config.kind == "incompat":
        return run_incompat(config)
    raise ValueError(f"unknown experiment kind {config.kind!r}")
