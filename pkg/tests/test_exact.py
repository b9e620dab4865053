import math

import numpy as np
import pytest

from seqaudit.exact import (
    brute_force_crossing,
    exact_time_error,
    hypergeom_pmf,
    initial_reach,
    propagate,
    schedule_profile,
)


class TestHypergeomPmf:
    def test_direct_counting(self):
        assert hypergeom_pmf(4, 2, 2, 1) == pytest.approx(2 / 3, abs=1e-15)

    def test_first_draw_is_p0(self):
        assert hypergeom_pmf(100, 20, 1, 1) == pytest.approx(0.2, abs=1e-15)

    def test_full_inspection_deterministic(self):
        assert hypergeom_pmf(10, 3, 10, 3) == 1.0
        assert hypergeom_pmf(10, 3, 10, 2) == 0.0

    def test_rejects_overdraw(self):
        with pytest.raises(ValueError):
            hypergeom_pmf(5, 2, 6, 1)

    @pytest.mark.parametrize("n,m,t", [(7, 3, 4), (50, 11, 23), (500, 137, 250)])
    def test_sums_to_one(self, n, m, t):
        total = math.fsum(hypergeom_pmf(n, m, t, s) for s in range(t + 1))
        assert abs(total - 1.0) < 1e-10

    def test_big_population_no_overflow(self):
        v = hypergeom_pmf(10_000, 5_000, 5_000, 2_500)
        assert 0.0 < v < 1.0


class TestPropagate:
    def test_first_draw_bernoulli(self):
        table = propagate(initial_reach(4, 2), 4, 2, 0, 0)
        assert table.t == 1
        assert table.mass.tolist() == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_unconstrained_second_draw(self):
        stage1 = propagate(initial_reach(4, 2), 4, 2, 0, 0)
        open2 = propagate(stage1, 4, 2, 0, 1)
        assert open2.mass.tolist() == pytest.approx([1 / 6, 4 / 6, 1 / 6], abs=1e-15)

    def test_hand_computed_split_with_upper_stop(self):
        # stop-K at stage 1 when S_1 > 0: surviving mass 1/2 at s=0
        # splits by (m-0)/(n-1) = 2/3 into {0: 1/6, 1: 1/3}
        stage1 = propagate(initial_reach(4, 2), 4, 2, 0, 0)
        banded = propagate(stage1, 4, 2, 0, 0)
        assert banded.stopped_high == pytest.approx(0.5, abs=1e-15)
        assert banded.mass[0] == pytest.approx(1 / 6, abs=1e-15)
        assert banded.mass[1] == pytest.approx(1 / 3, abs=1e-15)

    def test_absorbing_stop_empties_table(self):
        stage1 = propagate(initial_reach(4, 2), 4, 2, 0, 0)
        dead = propagate(stage1, 4, 2, 2, 1)  # collapsed band removes all mass
        assert not dead.mass.any()
        assert dead.stopped_low + dead.stopped_high == pytest.approx(1.0, abs=1e-15)

    def test_rejects_draw_past_population(self):
        table = initial_reach(2, 1)
        table = propagate(table, 2, 1, 0, 0)
        table = propagate(table, 2, 1, 0, 1)
        with pytest.raises(ValueError):
            propagate(table, 2, 1, 0, 2)

    @pytest.mark.parametrize("n,m", [(17, 6), (60, 13), (200, 81)])
    def test_unconstrained_reproduces_pmf(self, n, m):
        table = initial_reach(n, m)
        for t in range(n):
            table = propagate(table, n, m, 0, t)
        # spot-check a handful of stages by rebuilding
        table = initial_reach(n, m)
        for t in range(1, n + 1):
            table = propagate(table, n, m, 0, t - 1)
            if t in (1, n // 3, n // 2, n):
                for s in range(table.mass.size):
                    assert table.mass[s] == pytest.approx(
                        hypergeom_pmf(n, m, t, s), abs=1e-10
                    )

    def test_conservation_under_random_bands(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(4, 21))
            m = int(rng.integers(0, n + 1))
            table = propagate(initial_reach(n, m), n, m, 0, 0)
            for t in range(1, n):
                low = int(rng.integers(0, t + 2)) - 1
                high = int(rng.integers(low, t + 1))
                table = propagate(table, n, m, max(low, 0), high)
                assert table.conservation_defect() < 1e-12

    def test_accumulated_dp_error_stays_tiny_at_n_2000(self):
        # unconstrained DP vs the exact big-integer pmf after 2,000 stages:
        # the drift bound claimed for boundary-constrained tables
        n, m = 2000, 300
        table = initial_reach(n, m)
        checkpoints = {500, 1000, 2000}
        for t in range(1, n + 1):
            table = propagate(table, n, m, 0, t - 1)
            if t in checkpoints:
                worst = max(
                    abs(table.mass[s] - hypergeom_pmf(n, m, t, s))
                    for s in range(table.mass.size)
                )
                assert worst < 1e-12, f"t={t}: DP drift {worst:.2e}"
                assert table.conservation_defect() < 1e-12


class TestExactTimeError:
    def test_stage1_upper_equals_p_h_star(self):
        assert exact_time_error(100, 15, [], [], 1, "upper", 0) == pytest.approx(0.15, abs=1e-15)

    def test_stage1_lower_equals_one_minus_p_k_star(self):
        assert exact_time_error(100, 25, [], [], 1, "lower", 1) == pytest.approx(0.75, abs=1e-15)

    def test_rejects_bad_stage(self):
        with pytest.raises(ValueError):
            exact_time_error(10, 3, [], [], 0, "upper", 0)
        with pytest.raises(ValueError):
            exact_time_error(10, 3, [0] * 10, [1] * 10, 11, "upper", 0)

    def test_matches_brute_force_per_stage(self):
        # exact-time masses vs enumeration over every arrangement, n=8
        n = 8
        rng = np.random.default_rng(11)
        for m in range(n + 1):
            lower = [max(0, int(rng.integers(-1, t // 2 + 1))) for t in range(1, n)]
            upper = [min(t, lower[t - 1] + int(rng.integers(1, t + 2))) for t in range(1, n)]
            profile = schedule_profile(n, m, lower, upper)
            for t in range(1, n):
                a = exact_time_error(n, m, lower[: t - 1], upper[: t - 1], t, "upper", upper[t - 1])
                b = exact_time_error(n, m, lower[: t - 1], upper[: t - 1], t, "lower", lower[t - 1])
                assert a == pytest.approx(profile.upper_mass[t - 1], abs=1e-14)
                assert b == pytest.approx(profile.lower_mass[t - 1], abs=1e-14)


class TestBruteForce:
    def test_forced_full_inspection(self):
        up, low, tau = brute_force_crossing(2, 1, [0], [1])
        assert (up, low, tau) == (0.0, 0.0, 2.0)

    def test_two_orderings(self):
        # stop-K iff S_1 = 1: two equiprobable orderings
        up, low, tau = brute_force_crossing(2, 1, [0], [0])
        assert up == pytest.approx(0.5, abs=1e-15)
        assert low == 0.0
        assert tau == pytest.approx(1.5, abs=1e-15)

    def test_rejects_large_population(self):
        with pytest.raises(ValueError):
            brute_force_crossing(11, 5, [0] * 10, [10] * 10)

    def test_dp_equals_enumeration(self):
        rng = np.random.default_rng(23)
        for n in (4, 6, 8):
            for m in range(n + 1):
                for _ in range(3):
                    lower = [int(rng.integers(0, t + 2)) for t in range(1, n)]
                    upper = [int(rng.integers(0, t + 1)) for t in range(1, n)]
                    profile = schedule_profile(n, m, lower, upper)
                    up, low, tau = brute_force_crossing(n, m, lower, upper)
                    assert abs(profile.total_upper - up) < 1e-12
                    assert abs(profile.total_lower - low) < 1e-12
                    assert abs(profile.expected_tau - tau) < 1e-12
