"""Finite audit populations, the feasible rate grid, and random inspection orders.

Everything downstream works in integer count space: a population is a bag of
n binary deviation indicators with m ones, and an inspection order is summarized
by its running deviation counts S_1..S_n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "FinitePopulation",
    "DeviationPath",
    "synth_population",
    "sample_path",
    "nearest_grid_rate",
    "rate_to_fraction",
    "replication_rng",
    "batch_prefix_counts",
]


def rate_to_fraction(p: float) -> Fraction:
    """Exact rational value of a decimal-specified rate.

    Rates arrive as floats parsed from decimal text (configs, CLI flags).
    Going through ``str`` recovers the intended decimal, so n*r comparisons
    (e.g. floor(n*r)) are exact instead of inheriting binary float error:
    0.29 * 100 == 28.999999999999996 in binary, but 29 here.
    """
    return Fraction(str(float(p)))


@dataclass(frozen=True)
class FinitePopulation:
    """n binary audit items; m is the number of deviating ones."""

    items: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.items, dtype=np.int8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("population must be a nonempty 1-D 0/1 sequence")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("population items must be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "items", arr)

    @property
    def n(self) -> int:
        return int(self.items.size)

    @property
    def m(self) -> int:
        return int(self.items.sum())

    @property
    def p0(self) -> Fraction:
        return Fraction(self.m, self.n)


@dataclass(frozen=True)
class DeviationPath:
    """Running deviation counts S_1..S_n of one inspection order."""

    prefix_counts: np.ndarray
    source_seed: tuple = field(default=())

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.prefix_counts, dtype=np.int32)
        arr.setflags(write=False)
        object.__setattr__(self, "prefix_counts", arr)

    @property
    def n(self) -> int:
        return int(self.prefix_counts.size)

    @property
    def m(self) -> int:
        return int(self.prefix_counts[-1])


def synth_population(n: int, m: int) -> FinitePopulation:
    """Population with exactly m deviations among n items (canonical order).

    Ordering is irrelevant: every consumer permutes the items before use.
    """
    n = int(n)
    m = int(m)
    if n <= 0:
        raise ValueError(f"population size must be positive, got n={n}")
    if m < 0 or m > n:
        raise ValueError(f"deviation count must satisfy 0 <= m <= n, got m={m}, n={n}")
    items = np.zeros(n, dtype=np.int8)
    items[:m] = 1
    return FinitePopulation(items)


def replication_rng(master_seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one replication, mixed from (master seed, stream, index).

    The fixed mixing makes every replication independent of execution order,
    so parallel evaluation cannot change any result.
    """
    ss = np.random.SeedSequence((int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(index)))
    return np.random.default_rng(ss)


def sample_path(pop: FinitePopulation, seed) -> DeviationPath:
    """Uniformly random inspection order of ``pop``, as prefix counts.

    ``seed`` may be an integer or a (master, stream, index) triple; identical
    inputs yield identical paths. Paths depend on ``pop`` only through (n, m),
    so permuting the stored items changes nothing.
    """
    if isinstance(seed, tuple):
        rng = replication_rng(*seed)
        tag = seed
    else:
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
        tag = (int(seed),)
    canonical = np.zeros(pop.n, dtype=np.int8)
    canonical[: pop.m] = 1
    order = rng.permutation(canonical)
    return DeviationPath(np.cumsum(order, dtype=np.int32), source_seed=tag)


def batch_prefix_counts(
    n: int, m: int, count: int, master_seed: int, stream: int, start_index: int = 0
) -> np.ndarray:
    """(count, n) int32 matrix of prefix-count paths with per-replication seeds.

    Row i is ``sample_path`` under seed (master_seed, stream, start_index + i);
    rows can therefore be generated in any partition without changing results.
    """
    out = np.empty((count, n), dtype=np.int32)
    canonical = np.zeros(n, dtype=np.int8)
    canonical[:m] = 1
    for i in range(count):
        rng = replication_rng(master_seed, stream, start_index + i)
        np.cumsum(rng.permutation(canonical), dtype=np.int32, out=out[i])
    return out


def nearest_grid_rate(p: float, n: int) -> int:
    """Deviation count m minimizing |m/n - p|; midpoint ties round up.

    Rounding up is the conservative direction for audit risk.
    """
    if not (0.0 <= float(p) <= 1.0):
        raise ValueError(f"rate must lie in [0, 1], got {p}")
    if int(n) <= 0:
        raise ValueError(f"population size must be positive, got n={n}")
    target = int(n) * rate_to_fraction(p)
    m = int(target + Fraction(1, 2))  # floor(target + 1/2): round half up
    return min(max(m, 0), int(n))
