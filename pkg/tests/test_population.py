import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqaudit.exact import hypergeom_pmf
from seqaudit.population import (
    batch_prefix_counts,
    nearest_grid_rate,
    sample_path,
    synth_population,
)


class TestSynthPopulation:
    def test_saturated(self):
        pop = synth_population(3, 3)
        assert pop.items.tolist() == [1, 1, 1]
        assert pop.p0 == 1

    def test_audit_risk_counts(self):
        pop = synth_population(776, 305)
        assert (pop.n, pop.m) == (776, 305)
        assert round(float(pop.p0), 4) == 0.3930

    def test_empty(self):
        pop = synth_population(4, 0)
        assert pop.items.tolist() == [0, 0, 0, 0]
        assert pop.p0 == 0

    @pytest.mark.parametrize("n,m", [(3, -1), (3, 4), (0, 0)])
    def test_rejects_bad_counts(self, n, m):
        with pytest.raises(ValueError):
            synth_population(n, m)


class TestSamplePath:
    def test_all_deviations(self):
        path = sample_path(synth_population(3, 3), 17)
        assert path.prefix_counts.tolist() == [1, 2, 3]

    def test_no_deviations(self):
        path = sample_path(synth_population(5, 0), 17)
        assert path.prefix_counts.tolist() == [0] * 5

    def test_first_draw_frequency(self):
        # P(S_1 = 1) = 1/2 for (n=2, m=1); binomial SE over 10k seeds = 0.005
        pop = synth_population(2, 1)
        hits = sum(int(sample_path(pop, (9, 0, i)).prefix_counts[0]) for i in range(10_000))
        assert abs(hits / 10_000 - 0.5) < 0.02

    def test_deterministic_in_seed(self):
        pop = synth_population(40, 11)
        a = sample_path(pop, (5, 2, 77)).prefix_counts
        b = sample_path(pop, (5, 2, 77)).prefix_counts
        assert np.array_equal(a, b)

    @given(
        n=st.integers(1, 40),
        frac=st.fractions(0, 1),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60)
    def test_monotone_unit_steps(self, n, frac, seed):
        m = round(frac * n)
        counts = sample_path(synth_population(n, m), seed).prefix_counts
        steps = np.diff(np.concatenate([[0], counts]))
        assert set(steps.tolist()) <= {0, 1}
        assert counts[-1] == m

    def test_batch_rows_match_per_replication_paths(self):
        batch = batch_prefix_counts(12, 5, 8, master_seed=42, stream=6, start_index=3)
        for i in range(8):
            single = sample_path(synth_population(12, 5), (42, 6, 3 + i))
            assert np.array_equal(batch[i], single.prefix_counts)

    def test_prefix_law_matches_hypergeometric(self):
        # empirical S_t distribution vs exact pmf, 4 SE per support point
        n, m, t, reps = 9, 4, 5, 50_000
        batch = batch_prefix_counts(n, m, reps, master_seed=1, stream=8)
        counts = np.bincount(batch[:, t - 1], minlength=m + 1)
        for s in range(m + 1):
            p = hypergeom_pmf(n, m, t, s)
            se = math.sqrt(p * (1 - p) / reps)
            assert abs(counts[s] / reps - p) <= 4 * se + 1e-12


class TestNearestGridRate:
    @pytest.mark.parametrize(
        "p,n,expect",
        [(0.2, 100, 20), (0.201, 100, 20), (0.25, 2, 1), (0.0, 7, 0), (1.0, 7, 7)],
    )
    def test_examples(self, p, n, expect):
        assert nearest_grid_rate(p, n) == expect

    @pytest.mark.parametrize("p", [-0.01, 1.01])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(ValueError):
            nearest_grid_rate(p, 10)

    @given(n=st.integers(1, 200), p=st.floats(0, 1, allow_nan=False))
    @settings(max_examples=100)
    def test_minimizes_distance_with_upward_ties(self, n, p):
        m = nearest_grid_rate(p, n)
        target = Fraction(str(p))
        dist = abs(Fraction(m, n) - target)
        for other in range(n + 1):
            other_dist = abs(Fraction(other, n) - target)
            assert dist <= other_dist
            if other_dist == dist:
                assert m >= other
