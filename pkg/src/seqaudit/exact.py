"""Exact finite-population probability computations under the hypergeometric law.

The workhorse is a forward dynamic program over (stage, running count) with
explicit continuation bands, which handles arbitrary boundary shapes exactly in
O(n^2) time. A brute-force permutation enumerator over tiny populations serves
as the independent oracle for everything built on top.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "hypergeom_pmf",
    "ReachTable",
    "initial_reach",
    "propagate",
    "exact_time_error",
    "reach_under_prefix",
    "ExactProfile",
    "schedule_profile",
    "brute_force_crossing",
]


def hypergeom_pmf(n: int, m: int, t: int, s: int) -> float:
    """P(S_t = s) when t items are drawn without replacement: C(m,s)C(n-m,t-s)/C(n,t).

    Exact big-integer arithmetic with one correctly rounded division, so no
    overflow or log-space error for any n up to at least 10,000.
    """
    n, m, t, s = int(n), int(m), int(t), int(s)
    if t > n or t < 0:
        raise ValueError(f"draw count must satisfy 0 <= t <= n, got t={t}, n={n}")
    if not (0 <= m <= n):
        raise ValueError(f"deviation count must satisfy 0 <= m <= n, got m={m}")
    if s < 0 or s > t or s > m or t - s > n - m:
        return 0.0
    return math.comb(m, s) * math.comb(n - m, t - s) / math.comb(n, t)


@dataclass(frozen=True)
class ReachTable:
    """Mass over S_t = s jointly with "no boundary crossed at any stage before t".

    ``mass[s]`` covers s = 0..len-1; stopped_low/stopped_high carry the mass
    absorbed by earlier lower/upper crossings, so the three parts always sum
    to one (the conservation check below).
    """

    t: int
    mass: np.ndarray
    stopped_low: float = 0.0
    stopped_high: float = 0.0

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.mass, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "mass", arr)

    def total(self) -> float:
        return math.fsum(self.mass.tolist())

    def conservation_defect(self) -> float:
        return abs(math.fsum([*self.mass.tolist(), self.stopped_low, self.stopped_high]) - 1.0)

    def tail_above(self, c: int) -> float:
        """Mass with S_t > c."""
        return math.fsum(self.mass[max(int(c) + 1, 0):].tolist())

    def tail_below(self, c: int) -> float:
        """Mass with S_t < c."""
        return math.fsum(self.mass[: max(int(c), 0)].tolist())


def initial_reach(n: int, m: int) -> ReachTable:
    """Stage-0 table: no draws yet, all mass at S_0 = 0."""
    if not (0 <= int(m) <= int(n)):
        raise ValueError(f"deviation count must satisfy 0 <= m <= n, got m={m}, n={n}")
    return ReachTable(t=0, mass=np.ones(1))


def propagate(reach: ReachTable, n: int, m: int, lower: int, upper: int) -> ReachTable:
    """Apply the stage-t band [lower, upper], then advance one draw to stage t+1.

    Mass outside the band is absorbed into the stopped ledgers; surviving mass
    moves by the conditional law P(X_{t+1}=1 | S_t=s) = (m-s)/(n-t).
    """
    t = reach.t
    if t >= n:
        raise ValueError(f"cannot draw past the population, got t={t}, n={n}")
    mass = reach.mass
    lo = max(int(lower), 0)
    hi = min(int(upper), mass.size - 1)

    # lower absorption has precedence: in a collapsed band (lower > upper)
    # the counts below lower stop as accept-H, everything else as accept-K
    stopped_low = reach.stopped_low + math.fsum(mass[:lo].tolist())
    stopped_high = reach.stopped_high + math.fsum(mass[max(hi + 1, lo):].tolist())
    surviving = np.zeros_like(mass)
    if lo <= hi:
        surviving[lo : hi + 1] = mass[lo : hi + 1]

    s = np.arange(mass.size)
    p_dev = np.clip((m - s) / (n - t), 0.0, 1.0)
    width = min(t + 1, m) + 1
    new = np.zeros(width)
    keep = surviving * (1.0 - p_dev)
    move = surviving * p_dev
    new[: min(mass.size, width)] += keep[:width]
    new[1 : min(mass.size + 1, width)] += move[: width - 1]
    return ReachTable(t=t + 1, mass=new, stopped_low=stopped_low, stopped_high=stopped_high)


def reach_under_prefix(
    n: int, m: int, prefix_lower: Sequence[int], prefix_upper: Sequence[int], t: int
) -> ReachTable:
    """Reach table at stage t given bands fixed for stages 1..t-1."""
    if len(prefix_lower) < t - 1 or len(prefix_upper) < t - 1:
        raise ValueError(f"schedule prefix must cover stages 1..{t - 1}")
    reach = propagate(initial_reach(n, m), n, m, 0, 0)
    for stage in range(1, t):
        reach = propagate(reach, n, m, prefix_lower[stage - 1], prefix_upper[stage - 1])
    return reach


def exact_time_error(
    n: int,
    m: int,
    prefix_lower: Sequence[int],
    prefix_upper: Sequence[int],
    t: int,
    side: str,
    candidate: int,
) -> float:
    """Exact-time crossing probability at stage t for one candidate threshold.

    side="upper" gives A_t(c) = P(S_t > c, continued through t-1);
    side="lower" gives B_t(c) = P(S_t < c, continued through t-1).
    """
    if not (1 <= t <= n):
        raise ValueError(f"stage must satisfy 1 <= t <= n, got t={t}")
    reach = reach_under_prefix(n, m, prefix_lower, prefix_upper, t)
    if side == "upper":
        return reach.tail_above(candidate)
    if side == "lower":
        return reach.tail_below(candidate)
    raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")


@dataclass(frozen=True)
class ExactProfile:
    """Exact-time crossing masses of a full schedule, plus the survivor law."""

    upper_mass: tuple
    lower_mass: tuple
    reach_horizon: np.ndarray
    total_upper: float
    total_lower: float
    expected_tau: float

    def decision_probabilities(self, accept_h_max: int) -> tuple[float, float]:
        """(P(accept H), P(accept K)) when survivors decide by S_horizon <= accept_h_max."""
        surv_h = math.fsum(self.reach_horizon[: accept_h_max + 1].tolist())
        surv_k = math.fsum(self.reach_horizon[accept_h_max + 1:].tolist())
        return (self.total_lower + surv_h, self.total_upper + surv_k)


def schedule_profile(
    n: int,
    m: int,
    lower: Sequence[int],
    upper: Sequence[int],
    t_start: int = 1,
    horizon: int | None = None,
) -> ExactProfile:
    """Run the DP under a full schedule; stages below t_start never stop.

    ``lower``/``upper`` give the bands for stages 1..t_end where
    t_end = len(lower); horizon defaults to t_end + 1 (= n for a standard
    schedule, = T for a truncated one) and is where survivors stop.
    """
    t_end = len(lower)
    if len(upper) != t_end:
        raise ValueError("lower and upper schedules must have equal length")
    horizon = t_end + 1 if horizon is None else int(horizon)
    if horizon != t_end + 1:
        raise ValueError(f"horizon must be t_end + 1 = {t_end + 1}, got {horizon}")
    if horizon > n:
        raise ValueError(f"horizon {horizon} exceeds population size {n}")

    reach = propagate(initial_reach(n, m), n, m, 0, 0)
    up_mass, low_mass = [], []
    for t in range(1, t_end + 1):
        if t < t_start:
            lo, hi = 0, t
        else:
            lo, hi = int(lower[t - 1]), int(upper[t - 1])
        # lower crossing takes precedence at collapsed bands (lo > hi)
        up_mass.append(reach.tail_above(max(hi, lo - 1)))
        low_mass.append(reach.tail_below(lo))
        reach = propagate(reach, n, m, lo, hi)

    total_upper = math.fsum(up_mass)
    total_lower = math.fsum(low_mass)
    survive = math.fsum(reach.mass.tolist())
    expected_tau = math.fsum(
        [t * (up_mass[t - 1] + low_mass[t - 1]) for t in range(1, t_end + 1)]
    ) + horizon * survive
    return ExactProfile(
        upper_mass=tuple(up_mass),
        lower_mass=tuple(low_mass),
        reach_horizon=reach.mass,
        total_upper=total_upper,
        total_lower=total_lower,
        expected_tau=expected_tau,
    )


def brute_force_crossing(
    n: int,
    m: int,
    lower: Sequence[int],
    upper: Sequence[int],
    t_start: int = 1,
) -> tuple[float, float, float]:
    """Exhaustive enumeration oracle over all C(n, m) distinct arrangements.

    Returns (total upper-crossing probability, total lower-crossing
    probability, expected stopping time), all exact rationals converted to
    float at the end. Survivors stop at the horizon len(lower) + 1.
    """
    if n > 10:
        raise ValueError(f"enumeration oracle is limited to n <= 10, got n={n}")
    if not (0 <= m <= n):
        raise ValueError(f"deviation count must satisfy 0 <= m <= n, got m={m}")
    t_end = len(lower)
    horizon = t_end + 1
    weight = Fraction(1, math.comb(n, m))
    up_p = low_p = Fraction(0)
    tau_sum = Fraction(0)
    for ones in itertools.combinations(range(n), m):
        s = 0
        tau, side = horizon, 0
        one_set = set(ones)
        for t in range(1, t_end + 1):
            s += 1 if (t - 1) in one_set else 0
            if t < t_start:
                continue
            if s < int(lower[t - 1]):
                tau, side = t, -1
                break
            if s > int(upper[t - 1]):
                tau, side = t, +1
                break
        if side > 0:
            up_p += weight
        elif side < 0:
            low_p += weight
        tau_sum += tau * weight
    return float(up_p), float(low_p), float(tau_sum)
