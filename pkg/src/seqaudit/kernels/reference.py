"""Pure NumPy kernels; the semantic reference for the compiled twin.

Every operation is integer counting followed by one float division per
comparison, so the compiled backend can (and must) reproduce these results
bit for bit.
"""

from __future__ import annotations

import numpy as np


class InfeasibleStageError(ValueError):
    """Raised when a stage's calibrated band is empty (lower > upper)."""


def _as_paths(s: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(s, dtype=np.int32)
    if arr.ndim != 2:
        raise ValueError("path matrix must be 2-D (replications x stages)")
    return arr


def mc_boundary_sweep(
    s_h: np.ndarray,
    s_k: np.ndarray,
    alpha: float,
    beta: float,
    t_start: int,
    t_end: int,
    calibrate_upper: bool = True,
):
    """Recursive earliest-stopping boundary selection over two path ensembles.

    ``s_h``/``s_k`` hold prefix counts, one row per replication; the upper
    boundary is tuned on ``s_h`` against ``alpha``, the lower on ``s_k``
    against ``beta``. Stages below ``t_start`` are forced to the no-stop band
    (0, t). Returns int64 arrays ``(lower, upper, cum_a_counts, cum_b_counts)``
    of length ``t_end`` plus the final alive masks of both ensembles.

    Cumulative error ledgers are kept as exact integer path counts; the
    feasibility comparison at a candidate c is (cum + count(c)) / M <= budget,
    evaluated in float64 exactly once per candidate.
    """
    s_h = _as_paths(s_h)
    s_k = _as_paths(s_k)
    m_reps = s_h.shape[0]
    if s_k.shape[0] != m_reps:
        raise ValueError("both ensembles must have the same replication count")
    if s_h.shape[1] < t_end or s_k.shape[1] < t_end:
        raise ValueError(f"ensembles must cover {t_end} stages")

    lower = np.zeros(t_end, dtype=np.int64)
    upper = np.zeros(t_end, dtype=np.int64)
    cum_a_counts = np.zeros(t_end, dtype=np.int64)
    cum_b_counts = np.zeros(t_end, dtype=np.int64)
    alive_h = np.ones(m_reps, dtype=bool)
    alive_k = np.ones(m_reps, dtype=bool)
    m_f = float(m_reps)
    cum_a = 0
    cum_b = 0

    for t in range(1, t_end + 1):
        if t < t_start:
            lower[t - 1] = 0
            upper[t - 1] = t
            cum_a_counts[t - 1] = cum_a
            cum_b_counts[t - 1] = cum_b
            continue

        col_h = s_h[:, t - 1]
        col_k = s_k[:, t - 1]

        if calibrate_upper and alive_h.any():
            hist_h = np.bincount(col_h[alive_h], minlength=t + 1)
            # tail[c] = number of alive H-paths with S_t > c, c = 0..t
            tail = hist_h[::-1].cumsum()[::-1]
            tail = np.concatenate([tail[1:], [0]]).astype(np.int64)
            feasible = (cum_a + tail).astype(np.float64) / m_f <= alpha
            u_t = int(np.argmax(feasible))
            if not feasible[u_t]:
                raise InfeasibleStageError(f"stage {t}: no feasible upper candidate")
            a_inc = int(tail[u_t])
        else:
            u_t = t
            a_inc = 0

        if alive_k.any():
            hist_k = np.bincount(col_k[alive_k], minlength=t + 1)
            # head[c] = number of alive K-paths with S_t < c, c = 0..t
            head = np.concatenate([[0], hist_k[: t + 1].cumsum()[:-1]]).astype(np.int64)
            feasible = (cum_b + head).astype(np.float64) / m_f <= beta
            l_t = t - int(np.argmax(feasible[::-1]))
            if not feasible[l_t]:
                raise InfeasibleStageError(f"stage {t}: no feasible lower candidate")
            b_inc = int(head[l_t])
        else:
            l_t = 0
            b_inc = 0

        # l_t > u_t is allowed: the stage band is empty, every surviving path
        # stops here (accept-H precedence), and both alive sets drain.
        cum_a += a_inc
        cum_b += b_inc
        lower[t - 1] = l_t
        upper[t - 1] = u_t
        cum_a_counts[t - 1] = cum_a
        cum_b_counts[t - 1] = cum_b
        if l_t > 0 or u_t < t:
            alive_h &= (col_h >= l_t) & (col_h <= u_t)
            alive_k &= (col_k >= l_t) & (col_k <= u_t)

    return lower, upper, cum_a_counts, cum_b_counts, alive_h, alive_k


def first_exit(
    s: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    t_start: int,
    t_end: int,
):
    """First stage in [t_start, t_end] where each path leaves its band.

    Returns ``(stage, side)``: stage is int64 (0 when the path never exits),
    side is int8 with +1 for an upper crossing (S_t > upper) and -1 for a
    lower crossing (S_t < lower).
    """
    s = _as_paths(s)
    lower = np.asarray(lower, dtype=np.int64)
    upper = np.asarray(upper, dtype=np.int64)
    if lower.size < t_end or upper.size < t_end:
        raise ValueError(f"schedule must cover {t_end} stages")
    if t_end < t_start:
        return np.zeros(s.shape[0], dtype=np.int64), np.zeros(s.shape[0], dtype=np.int8)
    cols = s[:, :t_end]
    below = cols < lower[None, :t_end]
    above = cols > upper[None, :t_end]
    if t_start > 1:
        below[:, : t_start - 1] = False
        above[:, : t_start - 1] = False
    crossed = below | above
    has = crossed.any(axis=1)
    first = np.argmax(crossed, axis=1)
    stage = np.where(has, first + 1, 0).astype(np.int64)
    rows = np.arange(s.shape[0])
    # lower crossing takes precedence: when a collapsed band (lower > upper)
    # makes both sides true, the decision is accept-H
    side = np.where(has, np.where(below[rows, first], -1, 1), 0).astype(np.int8)
    return stage, side
