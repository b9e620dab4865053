"""Kernel parity (compiled vs reference) and correctness against a slow oracle."""

import numpy as np
import pytest

from seqaudit import kernels
from seqaudit.kernels import reference


def naive_sweep(s_h, s_k, alpha, beta, t_start, t_end, calibrate_upper=True):
    """Estimator-level re-implementation used as an independent oracle."""
    m_reps = s_h.shape[0]
    alive_h = np.ones(m_reps, dtype=bool)
    alive_k = np.ones(m_reps, dtype=bool)
    lower, upper = [], []
    cum_a = cum_b = 0
    cum_a_hist, cum_b_hist = [], []
    for t in range(1, t_end + 1):
        if t < t_start:
            lower.append(0)
            upper.append(t)
            cum_a_hist.append(cum_a)
            cum_b_hist.append(cum_b)
            continue
        col_h = s_h[:, t - 1]
        col_k = s_k[:, t - 1]
        if calibrate_upper and alive_h.any():
            u_t, a_inc = None, None
            for c in range(t + 1):
                count = int((col_h[alive_h] > c).sum())
                if (cum_a + count) / m_reps <= alpha:
                    u_t, a_inc = c, count
                    break
        else:
            u_t, a_inc = t, 0
        if alive_k.any():
            l_t, b_inc = None, None
            for c in range(t, -1, -1):
                count = int((col_k[alive_k] < c).sum())
                if (cum_b + count) / m_reps <= beta:
                    l_t, b_inc = c, count
                    break
        else:
            l_t, b_inc = 0, 0
        cum_a += a_inc
        cum_b += b_inc
        lower.append(l_t)
        upper.append(u_t)
        cum_a_hist.append(cum_a)
        cum_b_hist.append(cum_b)
        alive_h &= (col_h >= l_t) & (col_h <= u_t)
        alive_k &= (col_k >= l_t) & (col_k <= u_t)
    return (
        np.array(lower), np.array(upper),
        np.array(cum_a_hist), np.array(cum_b_hist),
        alive_h, alive_k,
    )


def naive_first_exit(s, lower, upper, t_start, t_end):
    stages, sides = [], []
    for row in s:
        stage, side = 0, 0
        for t in range(t_start, t_end + 1):
            v = row[t - 1]
            if v < lower[t - 1]:
                stage, side = t, -1
                break
            if v > upper[t - 1]:
                stage, side = t, 1
                break
        stages.append(stage)
        sides.append(side)
    return np.array(stages), np.array(sides)


def random_ensembles(rng, m_reps, n):
    def paths(m):
        base = np.zeros((m_reps, n), dtype=np.int8)
        base[:, :m] = 1
        rng.permuted(base, axis=1, out=base)
        return np.cumsum(base, axis=1, dtype=np.int32)

    m_low = int(rng.integers(0, n // 2 + 1))
    m_high = int(rng.integers(m_low, n + 1))
    return paths(m_low), paths(m_high)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_sweep_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    n, m_reps = 24, 200
    s_h, s_k = random_ensembles(rng, m_reps, n)
    alpha, beta = float(rng.uniform(0.02, 0.3)), float(rng.uniform(0.02, 0.3))
    t_start = int(rng.integers(1, 5))
    got = reference.mc_boundary_sweep(s_h, s_k, alpha, beta, t_start, n - 1)
    want = naive_sweep(s_h, s_k, alpha, beta, t_start, n - 1)
    for g, w in zip(got, want):
        assert np.array_equal(g, w)


def test_sweep_one_sided_skips_upper():
    rng = np.random.default_rng(9)
    s_h, s_k = random_ensembles(rng, 150, 20)
    got = reference.mc_boundary_sweep(s_h, s_k, 0.1, 0.1, 1, 19, calibrate_upper=False)
    want = naive_sweep(s_h, s_k, 0.1, 0.1, 1, 19, calibrate_upper=False)
    assert np.array_equal(got[1], np.arange(1, 20))
    for g, w in zip(got, want):
        assert np.array_equal(g, w)


def test_first_exit_matches_naive():
    rng = np.random.default_rng(4)
    n = 30
    base = np.zeros((100, n), dtype=np.int8)
    base[:, : n // 3] = 1
    rng.permuted(base, axis=1, out=base)
    s = np.cumsum(base, axis=1, dtype=np.int32)
    lower = np.maximum(0, (np.arange(1, n) // 4) - 1).astype(np.int64)
    upper = (np.arange(1, n) // 2 + 1).astype(np.int64)
    for t_start in (1, 5):
        got = reference.first_exit(s, lower, upper, t_start, n - 1)
        want = naive_first_exit(s, lower, upper, t_start, n - 1)
        assert np.array_equal(got[0], want[0])
        assert np.array_equal(got[1], want[1])


def test_first_exit_lower_precedence_on_collapsed_band():
    s = np.array([[1, 1, 1, 1]], dtype=np.int32)
    lower = np.array([0, 3, 0], dtype=np.int64)  # stage 2 band collapsed: (3, 0)
    upper = np.array([1, 0, 3], dtype=np.int64)
    stage, side = reference.first_exit(s, lower, upper, 1, 3)
    assert stage.tolist() == [2]
    assert side.tolist() == [-1]  # S=1 is both < 3 and > 0; accept-H wins


@pytest.mark.skipif(kernels.fastpath is None, reason="compiled kernel not built")
class TestCompiledParity:
    @pytest.mark.parametrize("seed", range(6))
    def test_sweep_bit_identical(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(5, 60))
        m_reps = int(rng.integers(1, 400))
        s_h, s_k = random_ensembles(rng, m_reps, n)
        alpha, beta = float(rng.uniform(0.01, 0.4)), float(rng.uniform(0.01, 0.4))
        t_start = int(rng.integers(1, max(2, n // 3)))
        upper_on = bool(rng.integers(0, 2))
        ref = reference.mc_boundary_sweep(s_h, s_k, alpha, beta, t_start, n - 1, upper_on)
        fast = kernels.fastpath.mc_boundary_sweep(s_h, s_k, alpha, beta, t_start, n - 1, upper_on)
        for r, f in zip(ref, fast):
            assert np.array_equal(r, f)

    @pytest.mark.parametrize("seed", range(4))
    def test_first_exit_bit_identical(self, seed):
        rng = np.random.default_rng(200 + seed)
        n = int(rng.integers(3, 50))
        rows = int(rng.integers(1, 300))
        base = np.zeros((rows, n), dtype=np.int8)
        base[:, : int(rng.integers(0, n + 1))] = 1
        rng.permuted(base, axis=1, out=base)
        s = np.cumsum(base, axis=1, dtype=np.int32)
        lower = rng.integers(0, np.arange(1, n) + 2).astype(np.int64)
        upper = rng.integers(0, np.arange(1, n) + 1).astype(np.int64)
        t_start = int(rng.integers(1, n + 1))
        ref = reference.first_exit(s, lower, upper, t_start, n - 1)
        fast = kernels.fastpath.first_exit(s, lower, upper, t_start, n - 1)
        assert np.array_equal(ref[0], fast[0])
        assert np.array_equal(ref[1], fast[1])
