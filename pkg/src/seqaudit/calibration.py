"""Recursive stopping-boundary calibration with exact and Monte Carlo backends.

The boundary at each stage is the earliest-stopping threshold whose exact-time
error, added to the running ledger, still respects the cumulative budget. The
exact backend evaluates those errors with the hypergeometric DP; the Monte
Carlo backend estimates them on two fixed path ensembles drawn at the
least-favorable deviation rates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import exact, kernels
from .canonical import canonical_dumps, float_str, sha256_hex
from .population import batch_prefix_counts, nearest_grid_rate, rate_to_fraction

__all__ = [
    "VARIANTS",
    "BACKENDS",
    "DesignConfig",
    "BoundarySchedule",
    "TruncationRule",
    "CalibrationError",
    "stage1_boundaries",
    "mc_ensemble",
    "mc_exact_time_estimates",
    "calibrate",
    "min_sample_size",
    "truncated_terminal",
]

VARIANTS = ("two_sided", "one_sided", "one_sided_power", "two_stage", "truncated")
BACKENDS = ("exact", "monte_carlo")

# Seed-stream tags: calibration owns 0-2, evaluation uses separate streams.
STREAM_CALIB_UPPER = 0
STREAM_CALIB_LOWER = 1
STREAM_POWER = 2


class CalibrationError(ValueError):
    """Calibration could not produce a valid schedule for this configuration."""


@dataclass(frozen=True)
class DesignConfig:
    """Full description of one sequential audit design.

    alpha bounds the probability of accepting K on an acceptable population,
    beta the probability of accepting H on a problematic one (for one-sided
    variants the single lower boundary is budgeted by alpha).
    """

    n: int
    r: float
    theta_h: float
    theta_k: float
    alpha: float
    beta: float
    variant: str = "two_sided"
    t0: int = 1
    T: int | None = None
    m_reps: int = 10_000
    seed: int = 0
    backend: str = "monte_carlo"

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "t0", int(self.t0))
        object.__setattr__(self, "T", self.n if self.T is None else int(self.T))
        object.__setattr__(self, "m_reps", int(self.m_reps))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 0.5:
                raise ValueError(f"{name} must lie in (0, 1/2), got {v}")
        for name in ("theta_h", "theta_k"):
            v = getattr(self, name)
            if not 0.0 < v < 0.5:
                raise ValueError(f"{name} must lie in (0, 1/2), got {v}")
        if self.r - self.theta_h <= 0.0:
            raise ValueError(
                f"r - theta_h must be positive, got {self.r} - {self.theta_h}"
            )
        if self.r + self.theta_k >= 1.0:
            raise ValueError(
                f"r + theta_k must be below 1, got {self.r} + {self.theta_k}"
            )
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not 1 <= self.t0 <= self.T <= self.n:
            raise ValueError(
                f"stages must satisfy 1 <= t0 <= T <= n, got t0={self.t0}, T={self.T}, n={self.n}"
            )
        if self.m_reps < 1:
            raise ValueError(f"m_reps must be at least 1, got {self.m_reps}")
        if self.m_h_star >= self.m_k_star:
            raise ValueError(
                "least-favorable grid counts must separate: "
                f"m_H*={self.m_h_star} >= m_K*={self.m_k_star} "
                f"(n={self.n} cannot resolve theta_h={self.theta_h}, theta_k={self.theta_k})"
            )

    @property
    def m_h_star(self) -> int:
        return nearest_grid_rate(self.r - self.theta_h, self.n)

    @property
    def m_k_star(self) -> int:
        return nearest_grid_rate(self.r + self.theta_k, self.n)

    @property
    def p_h_star(self) -> float:
        return self.m_h_star / self.n

    @property
    def p_k_star(self) -> float:
        return self.m_k_star / self.n

    @property
    def one_sided(self) -> bool:
        return self.variant in ("one_sided", "one_sided_power")

    @property
    def m_null_boundary(self) -> int:
        """Calibration count for one-sided variants: grid point nearest r."""
        return nearest_grid_rate(self.r, self.n)

    @property
    def t_end(self) -> int:
        """Last stage with a calibrated band (exclusive of the horizon)."""
        return (self.T if self.variant == "truncated" else self.n) - 1

    @property
    def r_fraction(self) -> Fraction:
        return rate_to_fraction(self.r)

    @property
    def full_inspection_accept_h_max(self) -> int:
        """Largest S at full inspection that accepts H (decides 'acceptable')."""
        nr = self.n * self.r_fraction
        if self.one_sided:
            # strict comparison p0 < r
            return int(nr) - 1 if nr.denominator == 1 else int(nr)
        return int(nr)  # p0 <= r

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r": float_str(self.r),
            "theta_h": float_str(self.theta_h),
            "theta_k": float_str(self.theta_k),
            "alpha": float_str(self.alpha),
            "beta": float_str(self.beta),
            "variant": self.variant,
            "t0": self.t0,
            "T": self.T,
            "m_reps": self.m_reps,
            "seed": self.seed,
            "backend": self.backend,
        }

    @property
    def config_hash(self) -> str:
        return sha256_hex(canonical_dumps(self.to_dict()))


@dataclass(frozen=True)
class TruncationRule:
    """Terminal decision at the truncation stage T: accept K iff S_T > c_t."""

    T: int
    c_t: int
    residual_beta: float
    infeasible: bool


@dataclass(frozen=True, eq=False)
class BoundarySchedule:
    """Calibrated per-stage count bands plus the error ledger and provenance.

    Continue at stage t while lower[t-1] <= S_t <= upper[t-1]; lower = 0 and
    upper = t encode "no stop possible". cum_upper_err/cum_lower_err are the
    running exact-time error sums under the calibration backend's own
    probabilities.

    Near the end of a design both least-favorable survivor sets can separate,
    leaving an empty band (lower > upper). That stage decides every surviving
    path (S < lower accepts H with precedence, anything else accepts K), the
    ledgers stay within budget, and collapse_stage records the first such
    stage as a diagnostic.
    """

    config: DesignConfig
    lower: np.ndarray
    upper: np.ndarray
    cum_upper_err: np.ndarray
    cum_lower_err: np.ndarray
    min_stage: int = 1
    truncation: TruncationRule | None = None
    power_floor_stage: int | None = None
    power_target_met: bool = True
    collapse_stage: int | None = None

    def __post_init__(self) -> None:
        for name in ("lower", "upper"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("cum_upper_err", "cum_lower_err"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.config.n
        if self.lower.size != n - 1 or self.upper.size != n - 1:
            raise ValueError(f"schedule must cover stages 1..{n - 1}")

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def is_truncated(self) -> bool:
        return self.truncation is not None and self.truncation.T < self.config.n

    @property
    def horizon(self) -> int:
        return self.truncation.T if self.is_truncated else self.config.n

    def stage_bounds(self, t: int) -> tuple[int, int]:
        if not 1 <= t <= self.n - 1:
            raise ValueError(f"stage must lie in [1, {self.n - 1}], got {t}")
        return int(self.lower[t - 1]), int(self.upper[t - 1])

    def kappa_lower(self, t: int) -> float:
        return self.lower[t - 1] / t

    def kappa_upper(self, t: int) -> float:
        return self.upper[t - 1] / t


def stage1_boundaries(config: DesignConfig) -> tuple[int, int]:
    """Closed-form base case of the recursion, in count space.

    At t=1 the only informative thresholds are counts 0 and 1: stopping on a
    first-item deviation costs exactly p_H*, stopping on a first-item pass
    costs exactly 1 - p_K*.
    """
    u1 = 0 if config.p_h_star <= config.alpha else 1
    l1 = 1 if 1.0 - config.p_k_star <= config.beta else 0
    return l1, u1


def mc_ensemble(config: DesignConfig) -> tuple[np.ndarray, np.ndarray]:
    """The two fixed calibration ensembles: M paths at m_H* and M at m_K*.

    Per-replication seeds derive from (seed, stream, index), so the ensembles
    regenerate bit-identically regardless of how the work is partitioned.
    """
    s_h = batch_prefix_counts(config.n, config.m_h_star, config.m_reps, config.seed, STREAM_CALIB_UPPER)
    s_k = batch_prefix_counts(config.n, config.m_k_star, config.m_reps, config.seed, STREAM_CALIB_LOWER)
    return s_h, s_k


def mc_exact_time_estimates(
    ensemble: np.ndarray,
    alive: np.ndarray,
    t: int,
    side: str,
    candidates: Sequence[int],
) -> np.ndarray:
    """Estimated exact-time errors at stage t for each candidate threshold.

    side="upper" estimates A_t(c) = #{alive paths with S_t > c} / M;
    side="lower" estimates B_t(c) = #{alive paths with S_t < c} / M.
    """
    ensemble = np.asarray(ensemble)
    alive = np.asarray(alive, dtype=bool)
    m_reps = ensemble.shape[0]
    col = ensemble[alive, t - 1]
    out = np.empty(len(candidates), dtype=np.float64)
    for i, c in enumerate(candidates):
        if side == "upper":
            out[i] = int((col > int(c)).sum()) / m_reps
        elif side == "lower":
            out[i] = int((col < int(c)).sum()) / m_reps
        else:
            raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    return out


# ---------------------------------------------------------------------------
# Exact-backend sweep


def _fsum_tail_above(mass: np.ndarray, c: int) -> float:
    return math.fsum(mass[max(c + 1, 0):].tolist())


def _fsum_tail_below(mass: np.ndarray, c: int) -> float:
    return math.fsum(mass[: max(c, 0)].tolist())


def _scan_upper_exact(
    mass: np.ndarray, prev_inc: list[float], alpha: float, t: int
) -> tuple[int, float]:
    """Smallest c in {0..t} with fsum(ledger + A_t(c)) <= alpha.

    Feasibility uses the exact expression later stored in the ledger (one
    compensated sum over all increments), so the running ledger can never
    drift past alpha by rounding. The NumPy prescan only seeds the search.
    """
    def feasible(c: int) -> bool:
        return math.fsum([*prev_inc, _fsum_tail_above(mass, c)]) <= alpha

    cum = math.fsum(prev_inc)
    total = math.fsum(mass.tolist())
    tail = np.concatenate([total - np.cumsum(mass), np.zeros(max(t + 1 - mass.size, 0))])
    c = int(np.argmax(cum + tail <= alpha))
    while c > 0 and feasible(c - 1):
        c -= 1
    while not feasible(c):
        c += 1
        if c > t:
            raise CalibrationError(f"stage {t}: no feasible upper candidate")
    return c, _fsum_tail_above(mass, c)


def _scan_lower_exact(
    mass: np.ndarray, prev_inc: list[float], beta: float, t: int
) -> tuple[int, float]:
    """Largest c in {0..t} with fsum(ledger + B_t(c)) <= beta (see upper scan)."""
    def feasible(c: int) -> bool:
        return math.fsum([*prev_inc, _fsum_tail_below(mass, c)]) <= beta

    cum = math.fsum(prev_inc)
    total = math.fsum(mass.tolist())
    head = np.concatenate([[0.0], np.cumsum(mass)[:-1], np.full(max(t + 1 - mass.size, 0), total)])
    cond = cum + head <= beta
    c = t - int(np.argmax(cond[::-1]))
    while c < t and feasible(c + 1):
        c += 1
    while not feasible(c):
        c -= 1
        if c < 0:
            raise CalibrationError(f"stage {t}: no feasible lower candidate")
    return c, _fsum_tail_below(mass, c)


def _exact_sweep(
    config: DesignConfig,
    m_upper: int,
    m_lower: int,
    upper_budget: float,
    lower_budget: float,
    progress: Callable[[int, int], None] | None,
):
    """Stagewise recursion with DP reach tables at the two calibration counts."""
    n = config.n
    t_end = config.t_end
    t_start = max(1, config.t0)
    calibrate_upper = not config.one_sided

    reach_u = exact.propagate(exact.initial_reach(n, m_upper), n, m_upper, 0, 0)
    reach_l = exact.propagate(exact.initial_reach(n, m_lower), n, m_lower, 0, 0)
    lower = np.zeros(t_end, dtype=np.int64)
    upper = np.zeros(t_end, dtype=np.int64)
    a_inc: list[float] = []
    b_inc: list[float] = []
    cum_a_arr = np.zeros(t_end)
    cum_b_arr = np.zeros(t_end)
    cum_a = 0.0
    cum_b = 0.0

    for t in range(1, t_end + 1):
        if t < t_start:
            l_t, u_t = 0, t
        else:
            if calibrate_upper and reach_u.mass.any():
                u_t, inc_a = _scan_upper_exact(reach_u.mass, a_inc, upper_budget, t)
            else:
                u_t, inc_a = t, 0.0
            if reach_l.mass.any():
                l_t, inc_b = _scan_lower_exact(reach_l.mass, b_inc, lower_budget, t)
            else:
                l_t, inc_b = 0, 0.0
            # l_t may exceed u_t: the band collapsed and the stage decides
            # every surviving path (accept-H precedence); both reaches drain.
            a_inc.append(inc_a)
            b_inc.append(inc_b)
            cum_a = math.fsum(a_inc)
            cum_b = math.fsum(b_inc)
        lower[t - 1] = l_t
        upper[t - 1] = u_t
        cum_a_arr[t - 1] = cum_a
        cum_b_arr[t - 1] = cum_b
        reach_u = exact.propagate(reach_u, n, m_upper, l_t, u_t)
        reach_l = exact.propagate(reach_l, n, m_lower, l_t, u_t)
        if progress is not None:
            progress(t, t_end)

    return lower, upper, cum_a_arr, cum_b_arr, reach_u, reach_l


# ---------------------------------------------------------------------------
# Monte Carlo sweep


def _mc_sweep(
    config: DesignConfig,
    m_upper: int,
    m_lower: int,
    upper_budget: float,
    lower_budget: float,
    progress: Callable[[int, int], None] | None,
):
    t_end = config.t_end
    t_start = max(1, config.t0)
    s_h = batch_prefix_counts(config.n, m_upper, config.m_reps, config.seed, STREAM_CALIB_UPPER)
    s_k = batch_prefix_counts(config.n, m_lower, config.m_reps, config.seed, STREAM_CALIB_LOWER)
    if progress is not None:
        progress(0, t_end)
    try:
        lower, upper, cum_a_counts, cum_b_counts, alive_h, alive_k = kernels.mc_boundary_sweep(
            s_h,
            s_k,
            upper_budget,
            lower_budget,
            t_start,
            t_end,
            calibrate_upper=not config.one_sided,
        )
    except ValueError as err:
        raise CalibrationError(str(err)) from err
    if progress is not None:
        progress(t_end, t_end)
    cum_a = cum_a_counts.astype(np.float64) / config.m_reps
    cum_b = cum_b_counts.astype(np.float64) / config.m_reps
    return lower, upper, cum_a, cum_b, (s_h, alive_h, cum_a_counts), (s_k, alive_k, cum_b_counts)


# ---------------------------------------------------------------------------
# Truncated terminal rule


def _terminal_threshold_exact(
    reach_u: exact.ReachTable,
    reach_l: exact.ReachTable,
    cum_a: float,
    cum_b: float,
    alpha: float,
    beta: float,
    T: int,
) -> TruncationRule:
    c = 0
    while cum_a + reach_u.tail_above(c) > alpha:
        c += 1
        if c > T:
            raise CalibrationError(f"no feasible terminal threshold at T={T}")
    residual = cum_b + math.fsum(reach_l.mass[: c + 1].tolist())
    return TruncationRule(T=T, c_t=c, residual_beta=residual, infeasible=residual > beta)


def _terminal_threshold_mc(
    s_h: np.ndarray,
    alive_h: np.ndarray,
    s_k: np.ndarray,
    alive_k: np.ndarray,
    cum_a_count: int,
    cum_b_count: int,
    m_reps: int,
    alpha: float,
    beta: float,
    T: int,
) -> TruncationRule:
    col_h = s_h[alive_h, T - 1]
    col_k = s_k[alive_k, T - 1]
    c = 0
    while (cum_a_count + int((col_h > c).sum())) / m_reps > alpha:
        c += 1
        if c > T:
            raise CalibrationError(f"no feasible terminal threshold at T={T}")
    residual = (cum_b_count + int((col_k <= c).sum())) / m_reps
    return TruncationRule(T=T, c_t=c, residual_beta=residual, infeasible=residual > beta)


def truncated_terminal(config: DesignConfig, schedule: BoundarySchedule) -> TruncationRule:
    """Terminal count threshold at the truncation stage for a calibrated prefix.

    With T = n this degenerates to the standard full-inspection rule. The
    lower-side residual is reported, not enforced: small T can make the beta
    budget unattainable, and callers decide what to do with the flag.
    """
    if config.variant != "truncated":
        raise ValueError("truncated_terminal applies only to the truncated variant")
    T = config.T
    if T >= config.n:
        return TruncationRule(
            T=T, c_t=config.full_inspection_accept_h_max, residual_beta=0.0, infeasible=False
        )
    prefix_lower = schedule.lower[: T - 1]
    prefix_upper = schedule.upper[: T - 1]
    cum_a = float(schedule.cum_upper_err[T - 2]) if T > 1 else 0.0
    cum_b = float(schedule.cum_lower_err[T - 2]) if T > 1 else 0.0
    if config.backend == "exact":
        reach_u = exact.reach_under_prefix(config.n, config.m_h_star, prefix_lower, prefix_upper, T)
        reach_l = exact.reach_under_prefix(config.n, config.m_k_star, prefix_lower, prefix_upper, T)
        return _terminal_threshold_exact(
            reach_u, reach_l, cum_a, cum_b, config.alpha, config.beta, T
        )
    s_h, s_k = mc_ensemble(config)
    stage_h, _ = kernels.first_exit(s_h, prefix_lower, prefix_upper, max(1, config.t0), T - 1)
    stage_k, _ = kernels.first_exit(s_k, prefix_lower, prefix_upper, max(1, config.t0), T - 1)
    return _terminal_threshold_mc(
        s_h,
        stage_h == 0,
        s_k,
        stage_k == 0,
        round(cum_a * config.m_reps),
        round(cum_b * config.m_reps),
        config.m_reps,
        config.alpha,
        config.beta,
        T,
    )


# ---------------------------------------------------------------------------
# One-sided power floor


def min_sample_size(config: DesignConfig, schedule: BoundarySchedule) -> tuple[int, bool]:
    """Smallest stage floor keeping Monte Carlo power at the alternative >= 1-beta.

    Power of the restricted rule inf{t >= floor : S_t < lower_t} at the
    least-favorable alternative count nearest r - theta_h, counting terminal
    full-inspection rejection. Restricting can only remove stopping
    opportunities, so the unrestricted type-I guarantee carries over. Returns
    (floor, target_met); falls back to n with a warning when no floor reaches
    the target, which signals a Monte Carlo anomaly because terminal rejection
    is certain whenever the alternative rate is below r.
    """
    n = config.n
    m_alt = nearest_grid_rate(config.r - config.theta_h, n)
    paths = batch_prefix_counts(n, m_alt, config.m_reps, config.seed, STREAM_POWER)
    fires = paths[:, : n - 1] < schedule.lower[None, : n - 1]
    any_fire = fires.any(axis=1)
    last_fire = np.where(any_fire, n - 1 - np.argmax(fires[:, ::-1], axis=1), 0)
    fire_counts = np.bincount(last_fire, minlength=n)
    fires_at_or_after = fire_counts[::-1].cumsum()[::-1]  # index t: paths with last fire >= t

    nr = n * config.r_fraction
    terminal_rejects = Fraction(m_alt) < nr
    target = 1.0 - config.beta
    for floor in range(1, n + 1):
        early = int(fires_at_or_after[floor]) if floor <= n - 1 else 0
        rejected = config.m_reps if terminal_rejects else early
        if rejected / config.m_reps >= target:
            return floor, True
    warnings.warn(
        "no minimum sample size reaches the power target; falling back to n "
        "(terminal full inspection always rejects below r, so this indicates "
        "a Monte Carlo anomaly)",
        RuntimeWarning,
        stacklevel=2,
    )
    return n, False


# ---------------------------------------------------------------------------
# Orchestration


def calibrate(
    config: DesignConfig, progress: Callable[[int, int], None] | None = None
) -> BoundarySchedule:
    """Construct the full boundary schedule for any variant and backend.

    Two-sided designs tune the upper boundary at m_H* against alpha and the
    lower at m_K* against beta; one-sided designs tune only the lower
    boundary, at the grid point nearest r, against alpha. Stages past a
    truncation point keep the no-stop encoding and the session terminates at
    T via the calibrated terminal threshold.
    """
    if config.one_sided:
        m_upper, m_lower = config.m_h_star, config.m_null_boundary
        upper_budget, lower_budget = config.alpha, config.alpha
    else:
        m_upper, m_lower = config.m_h_star, config.m_k_star
        upper_budget, lower_budget = config.alpha, config.beta

    sweep = _exact_sweep if config.backend == "exact" else _mc_sweep
    lower, upper, cum_a, cum_b, state_u, state_l = sweep(
        config, m_upper, m_lower, upper_budget, lower_budget, progress
    )

    n = config.n
    t_end = config.t_end
    full_lower = np.zeros(n - 1, dtype=np.int64)
    full_upper = np.arange(1, n, dtype=np.int64)  # no-stop defaults
    full_cum_a = np.zeros(n - 1)
    full_cum_b = np.zeros(n - 1)
    full_lower[:t_end] = lower
    full_upper[:t_end] = upper
    full_cum_a[:t_end] = cum_a
    full_cum_b[:t_end] = cum_b
    if t_end < n - 1:
        full_cum_a[t_end:] = cum_a[-1] if t_end else 0.0
        full_cum_b[t_end:] = cum_b[-1] if t_end else 0.0

    truncation = None
    if config.variant == "truncated":
        if config.T >= n:
            truncation = TruncationRule(
                T=config.T, c_t=config.full_inspection_accept_h_max,
                residual_beta=0.0, infeasible=False,
            )
        elif config.backend == "exact":
            reach_u, reach_l = state_u, state_l
            truncation = _terminal_threshold_exact(
                reach_u, reach_l, float(cum_a[-1]) if t_end else 0.0,
                float(cum_b[-1]) if t_end else 0.0,
                config.alpha, config.beta, config.T,
            )
        else:
            s_h, alive_h, cum_a_counts = state_u
            s_k, alive_k, cum_b_counts = state_l
            truncation = _terminal_threshold_mc(
                s_h, alive_h, s_k, alive_k,
                int(cum_a_counts[-1]) if t_end else 0,
                int(cum_b_counts[-1]) if t_end else 0,
                config.m_reps, config.alpha, config.beta, config.T,
            )

    collapsed = np.nonzero(full_lower > full_upper)[0]
    schedule = BoundarySchedule(
        config=config,
        lower=full_lower,
        upper=full_upper,
        cum_upper_err=full_cum_a,
        cum_lower_err=full_cum_b,
        min_stage=max(1, config.t0),
        truncation=truncation,
        collapse_stage=int(collapsed[0]) + 1 if collapsed.size else None,
    )

    if config.variant == "one_sided_power":
        floor, met = min_sample_size(config, schedule)
        schedule = replace(
            schedule,
            min_stage=max(max(1, config.t0), floor),
            power_floor_stage=floor,
            power_target_met=met,
        )
    return schedule
