import numpy as np
import pytest

from seqaudit import exact
from seqaudit.calibration import calibrate
from seqaudit.evaluation import (
    STREAM_OC,
    STREAM_REPLAY,
    classify_region,
    expected_tau_peak,
    oc_curve,
    replay,
    run_paths_batch,
    validate_full_grid,
)
from seqaudit.population import DeviationPath, FinitePopulation, batch_prefix_counts, synth_population
from seqaudit.procedure import run_path
from tests.conftest import make_config, make_schedule, no_stop_arrays


class TestRunBatch:
    def test_matches_run_path_loop(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        for m in (0, 7, 15, 30):
            paths = batch_prefix_counts(30, m, 40, master_seed=5, stream=9)
            taus, accept_k = run_paths_batch(schedule, paths)
            for i in range(paths.shape[0]):
                tau, decision = run_path(schedule, DeviationPath(paths[i]))
                assert taus[i] == tau
                assert bool(accept_k[i]) == (decision == "accepted_K")

    def test_truncated_and_min_stage_paths(self):
        schedule = calibrate(make_config(n=24, variant="truncated", T=9, backend="exact"))
        paths = batch_prefix_counts(24, 6, 60, master_seed=6, stream=9)
        taus, accept_k = run_paths_batch(schedule, paths)
        assert (taus <= 9).all()
        for i in range(60):
            tau, decision = run_path(schedule, DeviationPath(paths[i]))
            assert taus[i] == tau
            assert bool(accept_k[i]) == (decision == "accepted_K")


class TestOcCurve:
    def test_all_clean_population_never_accepts_k(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        (pt,) = oc_curve(schedule, [0], reps=400, seed=2)
        assert pt.accept_k_prob == 0.0
        assert pt.error_prob == 0.0

    def test_saturated_population_never_accepts_h(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        (pt,) = oc_curve(schedule, [30], reps=400, seed=2)
        assert pt.accept_k_prob == 1.0
        assert pt.error_prob == 0.0

    def test_rejects_bad_grid(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        with pytest.raises(ValueError, match="grid count"):
            oc_curve(schedule, [31], reps=10, seed=1)

    def test_worker_count_does_not_change_results(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        grid = range(0, 31, 3)
        a = oc_curve(schedule, grid, reps=300, seed=7, workers=1)
        b = oc_curve(schedule, grid, reps=300, seed=7, workers=4)
        assert a == b

    def test_error_convention_per_region(self):
        cfg = make_config(n=30, backend="exact")
        schedule = calibrate(cfg)
        pts = oc_curve(schedule, range(31), reps=200, seed=3)
        for pt in pts:
            region = classify_region(pt.m, 30, cfg)
            if region == "H":
                assert pt.error_prob == pt.accept_k_prob
            elif region == "K":
                assert pt.error_prob == pytest.approx(1 - pt.accept_k_prob)
            else:
                assert pt.error_prob == 0.0


class TestExpectedTauPeak:
    def test_single_point(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        pts = oc_curve(schedule, [4], reps=50, seed=1)
        assert expected_tau_peak(pts) == 4

    def test_all_stops_disabled_ties_break_downward(self):
        schedule = make_schedule(*no_stop_arrays(12))
        pts = oc_curve(schedule, [2, 5, 9], reps=30, seed=1)
        assert {pt.expected_tau for pt in pts} == {12.0}
        assert expected_tau_peak(pts) == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            expected_tau_peak([])


class TestValidateFullGrid:
    def test_exact_schedule_yields_no_flags(self):
        schedule = calibrate(make_config(n=40, backend="exact"))
        report = validate_full_grid(schedule, reps=1500, seed=13)
        assert report.ok
        assert len(report.points) == 41

    def test_deliberate_violation_is_detected(self):
        cfg = make_config(n=40, backend="exact")
        schedule = calibrate(cfg)
        # tighten the most loaded stage so the type-I error overshoots alpha
        reach = exact.propagate(exact.initial_reach(40, cfg.m_h_star), 40, cfg.m_h_star, 0, 0)
        added = []
        for t in range(1, 40):
            low, high = schedule.stage_bounds(t)
            added.append(reach.mass[high] if high < reach.mass.size else 0.0)
            reach = exact.propagate(reach, 40, cfg.m_h_star, low, high)
        t_star = int(np.argmax(added)) + 1
        upper = schedule.upper.copy()
        upper[t_star - 1] -= 1
        tampered = make_schedule(schedule.lower, upper, config=cfg)
        report = validate_full_grid(tampered, reps=4000, seed=17)
        assert not report.ok
        assert any(flag.m == cfg.m_h_star for flag in report.flags)

    def test_empty_grid_empty_report(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        report = validate_full_grid(schedule, reps=10, seed=1, grid=[])
        assert report.ok and report.points == ()


class TestReplay:
    def test_depends_only_on_counts(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        items = np.zeros(30, dtype=np.int8)
        items[:9] = 1
        shuffled = items.copy()
        np.random.default_rng(3).shuffle(shuffled)
        a = replay(FinitePopulation(items), schedule, reps=200, seed=5)
        b = replay(FinitePopulation(shuffled), schedule, reps=200, seed=5)
        assert a == b

    def test_worker_partition_invariance(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        pop = synth_population(30, 11)
        a = replay(pop, schedule, reps=333, seed=5, workers=1)
        b = replay(pop, schedule, reps=333, seed=5, workers=5)
        assert a == b

    def test_summary_contract(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        summary = replay(synth_population(30, 2), schedule, reps=500, seed=5)
        assert summary.runs == 500
        assert summary.q10_tau <= summary.median_tau <= summary.q90_tau
        assert summary.accepted_h + summary.accepted_k == 500
        assert 0 < summary.inspected_pct <= 100
        assert sum(summary.tau_histogram.values()) == 500
        assert summary.incorrect_pct == 100.0 * summary.accepted_k / 500
        assert not summary.in_indifference

    def test_indifference_population_flagged(self):
        cfg = make_config(n=30, backend="exact")
        schedule = calibrate(cfg)
        # m=6 -> p0=0.2=r inside (r-theta, r+theta]
        summary = replay(synth_population(30, 6), schedule, reps=100, seed=5)
        assert summary.in_indifference
        assert summary.incorrect_pct == 0.0
        assert summary.region_note is not None

    def test_nearest_rank_quantiles(self):
        schedule = make_schedule(*no_stop_arrays(9))
        summary = replay(synth_population(9, 4), schedule, reps=17, seed=1)
        assert summary.median_tau == 9 and summary.q10_tau == 9

    def test_rejects_size_mismatch(self):
        schedule = calibrate(make_config(n=30, backend="exact"))
        with pytest.raises(ValueError, match="does not match"):
            replay(synth_population(29, 3), schedule, reps=10, seed=1)


class TestExactMonotonicity:
    def test_accept_k_monotone_in_m(self):
        cfg = make_config(n=40, backend="exact")
        schedule = calibrate(cfg)
        cutoff = cfg.full_inspection_accept_h_max
        probs = []
        for m in range(41):
            prof = exact.schedule_profile(40, m, schedule.lower, schedule.upper)
            probs.append(prof.decision_probabilities(cutoff)[1])
        assert all(a <= b + 1e-12 for a, b in zip(probs, probs[1:]))

    def test_extreme_populations_stop_sooner(self):
        cfg = make_config(n=40, backend="exact")
        schedule = calibrate(cfg)

        def e_tau(m):
            return exact.schedule_profile(40, m, schedule.lower, schedule.upper).expected_tau

        assert e_tau(0) <= e_tau(cfg.m_h_star) + 1e-12
        assert e_tau(40) <= e_tau(cfg.m_k_star) + 1e-12

    def test_seed_streams_disjoint_from_calibration(self):
        from seqaudit.calibration import STREAM_CALIB_LOWER, STREAM_CALIB_UPPER, STREAM_POWER

        assert {STREAM_OC, STREAM_REPLAY}.isdisjoint(
            {STREAM_CALIB_UPPER, STREAM_CALIB_LOWER, STREAM_POWER}
        )
