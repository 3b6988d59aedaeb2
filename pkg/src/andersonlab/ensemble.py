"""Reproducible seeded trial execution.

Per-trial seeds come from the SplitMix64 sequence: stream i of a master
seed is finalizer(master + (i+1) * golden) with the published 64-bit
finalizer (xorshift-multiply rounds).  The mapping is fixed forever;
golden values are pinned in the test suite.

Trials run on a bounded thread pool (the hot kernels release the GIL),
but every aggregate is a deterministic fold in trial-index order, so the
worker count never changes any output.  Records are delivered to the
optional sink strictly in index order as soon as the next index is
available, which keeps JSONL output append-only and identical across
worker counts (up to wall-clock fields).
"""

import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, trial_index: int) -> int:
    """64-bit per-trial seed: SplitMix64 stream member trial_index."""
    z = (master_seed + (trial_index + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def _timed(trial_fn, index, seed):
    t0 = time.perf_counter()
    fields = trial_fn(index, seed)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    record = {"trial_index": index, "seed": seed}
    record.update(fields)
    record["elapsed_ms"] = elapsed_ms
    return record


def run_trials(trial_fn, samples: int, master_seed: int,
               workers: int = 1, sink=None) -> list:
    """Run `samples` independent trials of trial_fn(index, seed) -> dict.

    Returns the records in trial-index order, each augmented with
    trial_index, seed and elapsed_ms.  `sink(record)` is called in index
    order as records become available.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seeds = [derive_seed(master_seed, i) for i in range(samples)]
    records = [None] * samples
    next_emit = 0

    def emit_ready():
        nonlocal next_emit
        while next_emit < samples and records[next_emit] is not None:
            if sink is not None:
                sink(records[next_emit])
            next_emit += 1

    if workers <= 1:
        for i in range(samples):
            records[i] = _timed(trial_fn, i, seeds[i])
            emit_ready()
        return records

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = {
            pool.submit(_timed, trial_fn, i, seeds[i]): i for i in range(samples)
        }
        while pending:
            done, _ = wait(pending.keys(), return_when=FIRST_COMPLETED)
            for fut in done:
                i = pending.pop(fut)
                records[i] = fut.result()
            emit_ready()
    return records
