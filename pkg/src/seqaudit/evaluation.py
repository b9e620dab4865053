"""Operating characteristics and replay over random inspection orders.

Everything here runs on fresh seed streams, disjoint from the calibration
streams, and aggregates with order-independent integer accumulation so worker
counts cannot change any number.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .calibration import BoundarySchedule
from .population import FinitePopulation, batch_prefix_counts, rate_to_fraction, replication_rng

__all__ = [
    "OcPoint",
    "ReplaySummary",
    "GridFlag",
    "GridValidationReport",
    "oc_curve",
    "validate_full_grid",
    "replay",
    "expected_tau_peak",
    "run_paths_batch",
]

# Evaluation seed streams; calibration owns 0-2 (see calibration module).
STREAM_OC = 3
STREAM_REPLAY = 4

H_REGION = "H"
K_REGION = "K"
INDIFFERENT = "indifference"


@dataclass(frozen=True)
class OcPoint:
    """Decision behavior at one grid count m (true rate p = m/n)."""

    m: int
    p: float
    accept_k_prob: float
    error_prob: float
    expected_tau: float
    se_accept_k: float
    se_error: float
    se_tau: float
    region: str


@dataclass(frozen=True)
class ReplaySummary:
    """Stopping-time and decision statistics over R random orderings."""

    runs: int
    mean_tau: float
    median_tau: int
    q10_tau: int
    q90_tau: int
    incorrect_pct: float
    inspected_pct: float
    accepted_h: int
    accepted_k: int
    in_indifference: bool
    tau_histogram: dict

    @property
    def region_note(self) -> str | None:
        if self.in_indifference:
            return (
                "population rate lies inside the indifference region; "
                "no decision is counted as incorrect by convention"
            )
        return None


@dataclass(frozen=True)
class GridFlag:
    m: int
    p: float
    error_prob: float
    bound: float
    std_err: float


@dataclass(frozen=True)
class GridValidationReport:
    reps: int
    seed: int
    flags: tuple
    points: tuple

    @property
    def ok(self) -> bool:
        return not self.flags


def classify_region(m: int, n: int, config) -> str:
    """True-region label of the grid point m/n relative to the design."""
    p0 = Fraction(int(m), int(n))
    r = rate_to_fraction(config.r)
    if p0 <= r - rate_to_fraction(config.theta_h):
        return H_REGION
    if p0 > r + rate_to_fraction(config.theta_k):
        return K_REGION
    return INDIFFERENT


def run_paths_batch(schedule: BoundarySchedule, paths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized run_path over a (R, n) prefix-count matrix.

    Returns (tau int64[R], accept_k bool[R]); semantics match procedure.run_path
    exactly (tested against it).
    """
    horizon = schedule.horizon
    t_end = horizon - 1
    stage, side = kernels.first_exit(
        paths, schedule.lower, schedule.upper, schedule.min_stage, t_end
    )
    survived = stage == 0
    tau = np.where(survived, horizon, stage).astype(np.int64)
    if schedule.is_truncated:
        terminal_k = paths[:, horizon - 1] > schedule.truncation.c_t
    else:
        terminal_k = paths[:, horizon - 1] > schedule.config.full_inspection_accept_h_max
    accept_k = np.where(survived, terminal_k, side > 0)
    return tau, accept_k


def _point_stats(schedule, m, taus, accept_k_mask, region):
    reps = taus.size
    k_count = int(accept_k_mask.sum())
    accept_k_prob = k_count / reps
    if region == H_REGION:
        error_prob = accept_k_prob
    elif region == K_REGION:
        error_prob = 1.0 - accept_k_prob
    else:
        error_prob = 0.0
    se_k = math.sqrt(accept_k_prob * (1.0 - accept_k_prob) / reps)
    se_err = 0.0 if region == INDIFFERENT else se_k
    mean_tau = float(taus.mean())
    se_tau = float(taus.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return OcPoint(
        m=int(m),
        p=m / schedule.n,
        accept_k_prob=accept_k_prob,
        error_prob=error_prob,
        expected_tau=mean_tau,
        se_accept_k=se_k,
        se_error=se_err,
        se_tau=se_tau,
        region=region,
    )


def _oc_point(schedule: BoundarySchedule, m: int, reps: int, seed: int) -> OcPoint:
    n = schedule.n
    rng = replication_rng(seed, STREAM_OC, m)
    base = np.zeros((reps, n), dtype=np.int8)
    base[:, :m] = 1
    rng.permuted(base, axis=1, out=base)
    paths = np.cumsum(base, axis=1, dtype=np.int32)
    taus, accept_k = run_paths_batch(schedule, paths)
    region = classify_region(m, n, schedule.config)
    return _point_stats(schedule, m, taus, accept_k, region)


def oc_curve(
    schedule: BoundarySchedule, grid, reps: int, seed: int, workers: int = 1
) -> list[OcPoint]:
    """Operating characteristic over the requested grid counts.

    Each grid point uses its own seed stream derived from (seed, m), so the
    result is identical for any worker count and any grid ordering.
    """
    grid = [int(m) for m in grid]
    for m in grid:
        if not 0 <= m <= schedule.n:
            raise ValueError(f"grid count {m} outside [0, {schedule.n}]")
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}")
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda m: _oc_point(schedule, m, reps, seed), grid))
    else:
        points = [_oc_point(schedule, m, reps, seed) for m in grid]
    return points


def validate_full_grid(
    schedule: BoundarySchedule, reps: int, seed: int, grid=None, workers: int = 1
) -> GridValidationReport:
    """Monte Carlo check of the error bound at every feasible grid point.

    Flags any point outside the indifference region whose estimated error
    exceeds its budget by more than three standard errors.
    """
    config = schedule.config
    if grid is None:
        grid = range(schedule.n + 1)
    points = oc_curve(schedule, grid, reps, seed, workers=workers)
    flags = []
    for pt in points:
        if pt.region == INDIFFERENT:
            continue
        bound = config.alpha if pt.region == H_REGION else config.beta
        if config.one_sided:
            bound = config.alpha
        if pt.error_prob > bound + 3.0 * pt.se_error:
            flags.append(
                GridFlag(m=pt.m, p=pt.p, error_prob=pt.error_prob, bound=bound, std_err=pt.se_error)
            )
    return GridValidationReport(reps=reps, seed=seed, flags=tuple(flags), points=tuple(points))


def _nearest_rank(sorted_values: np.ndarray, q: float) -> int:
    rank = max(1, math.ceil(q * sorted_values.size))
    return int(sorted_values[rank - 1])


def replay(
    pop: FinitePopulation, schedule: BoundarySchedule, reps: int, seed: int, workers: int = 1
) -> ReplaySummary:
    """Re-run the sequential audit over R random orderings of one population.

    Paths are generated from the canonical (n, m) representation with
    per-replication seeds, so permuting the stored items cannot change the
    summary and replications may be generated in any partition.
    """
    n, m = pop.n, pop.m
    if n != schedule.n:
        raise ValueError(f"population size {n} does not match schedule n={schedule.n}")
    if reps < 1:
        raise ValueError(f"reps must be positive, got {reps}")

    def chunk(bounds):
        start, stop = bounds
        paths = batch_prefix_counts(n, m, stop - start, seed, STREAM_REPLAY, start_index=start)
        return run_paths_batch(schedule, paths)

    if workers > 1 and reps >= 2 * workers:
        edges = np.linspace(0, reps, workers + 1, dtype=int)
        jobs = list(zip(edges[:-1], edges[1:]))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, jobs))
        taus = np.concatenate([p[0] for p in parts])
        accept_k = np.concatenate([p[1] for p in parts])
    else:
        taus, accept_k = chunk((0, reps))

    region = classify_region(m, n, schedule.config)
    k_count = int(accept_k.sum())
    h_count = reps - k_count
    if region == H_REGION:
        incorrect = k_count
    elif region == K_REGION:
        incorrect = h_count
    else:
        incorrect = 0
    taus_sorted = np.sort(taus)
    mean_tau = float(taus.mean())
    values, counts = np.unique(taus, return_counts=True)
    return ReplaySummary(
        runs=reps,
        mean_tau=mean_tau,
        median_tau=_nearest_rank(taus_sorted, 0.5),
        q10_tau=_nearest_rank(taus_sorted, 0.1),
        q90_tau=_nearest_rank(taus_sorted, 0.9),
        incorrect_pct=100.0 * incorrect / reps,
        inspected_pct=100.0 * mean_tau / n,
        accepted_h=h_count,
        accepted_k=k_count,
        in_indifference=region == INDIFFERENT,
        tau_histogram={int(v): int(c) for v, c in zip(values, counts)},
    )


def expected_tau_peak(points) -> int:
    """Grid count with the largest expected stopping time; ties go down."""
    if not points:
        raise ValueError("operating characteristic is empty")
    ordered = sorted(points, key=lambda pt: pt.m)
    best = ordered[0]
    for pt in ordered[1:]:
        if pt.expected_tau > best.expected_tau:
            best = pt
    return best.m
