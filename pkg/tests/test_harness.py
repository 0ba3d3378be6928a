import numpy as np
import pytest

from hotv.harness import (
    CampaignInvalid,
    TrialResult,
    TrialSpec,
    build_trial_signal,
    load_campaign_csv,
    run_1d_campaign,
    run_2d_experiment,
    run_trial,
    save_2d_experiment,
    save_campaign,
    summarize_campaign,
    svg_histogram,
)
from hotv.operators import PATransform, pa_seminorm
from hotv.solver import SolverConfig
from hotv.tuning import LambdaSearchSpec

FAST_SEARCH = LambdaSearchSpec(grid_lo=1e-1, grid_hi=1e3, coarse_points=9,
                               refine_tol=0.2,
                               solver=SolverConfig(order=1, lam=1.0,
                                                   outer_max=60))


def synthetic_results(n_trials, rel=0.0, lam1=10.0):
    out = []
    for i in range(n_trials):
        lams = {1: lam1}
        errs = {}
        for k in (2, 3, 4):
            lams[k] = 2.0 ** (k - 1) * lam1 * (1.0 + rel)
            errs[k] = rel
        out.append(TrialResult(i, lams, errs, {k: 0.1 for k in lams}, {}, {}))
    return out


class TestTrialSpec:
    def test_derived_fields_deterministic(self):
        a = TrialSpec(trial_id=3, master_seed=42)
        b = TrialSpec(trial_id=3, master_seed=42)
        assert a == b

    def test_trials_differ(self):
        a = TrialSpec(trial_id=0, master_seed=42)
        b = TrialSpec(trial_id=1, master_seed=42)
        assert a.signal_seed != b.signal_seed
        assert (a.sampling_rate, a.sigma) != (b.sampling_rate, b.sigma)

    def test_fields_within_protocol_ranges(self):
        for tid in range(25):
            s = TrialSpec(trial_id=tid, master_seed=7)
            assert 0.25 <= s.sampling_rate <= 1.0 or s.m == round(
                s.sampling_rate * s.n
            )
            assert 0.0 <= s.sigma <= 3.0
            assert s.m == round(s.sampling_rate * s.n)

    def test_rate_bookkeeping_exact(self):
        s = TrialSpec(trial_id=5, master_seed=9, n=256)
        assert s.sampling_rate == s.m / s.n

    def test_signal_deterministic(self):
        s = TrialSpec(trial_id=2, master_seed=11, n=64)
        np.testing.assert_array_equal(build_trial_signal(s),
                                      build_trial_signal(s))


class TestRunTrial:
    def test_produces_per_order_results(self):
        spec = TrialSpec(trial_id=0, master_seed=5, n=64, orders=(1, 2))
        res = run_trial(spec, FAST_SEARCH)
        assert not res.failed
        assert set(res.lambda_opt) == {1, 2}
        assert set(res.scaling_error) == {2}
        expected = 0.5 * res.lambda_opt[2] / res.lambda_opt[1] - 1.0
        assert res.scaling_error[2] == pytest.approx(expected, rel=1e-12)

    def test_failure_recorded_not_raised(self):
        spec = TrialSpec(trial_id=0, master_seed=5, n=64,
                         sigma_range=(-2.0, -2.0))
        res = run_trial(spec, FAST_SEARCH)
        assert res.failed
        assert "ValueError" in res.message


class TestCampaign:
    def test_deterministic_and_jobs_invariant(self):
        kw = dict(n=64, orders=(1, 2))
        r1 = run_1d_campaign(3, 77, jobs=1, search=FAST_SEARCH, **kw)
        r2 = run_1d_campaign(3, 77, jobs=1, search=FAST_SEARCH, **kw)
        r3 = run_1d_campaign(3, 77, jobs=2, search=FAST_SEARCH, **kw)
        assert r1 == r2 == r3

    def test_invalid_when_too_many_failures(self):
        with pytest.raises(CampaignInvalid):
            run_1d_campaign(3, 1, search=FAST_SEARCH, n=64,
                            sigma_range=(-1.0, -1.0))

    def test_trial_count_validation(self):
        with pytest.raises(ValueError):
            run_1d_campaign(0, 1)

    def test_noiseless_full_sampling_hits_ceiling(self):
        res = run_1d_campaign(1, 3, search=FAST_SEARCH, n=64, orders=(1,),
                              sigma_range=(0.0, 0.0),
                              rate_range=(1.0, 1.0))[0]
        assert res.boundary_flags[1] == "high"


class TestSummarize:
    def test_perfect_scaling_masses_zero_bin(self):
        summary = summarize_campaign(synthetic_results(7, rel=0.0))
        for k in (2, 3, 4):
            counts = summary.histograms[k]
            assert counts.sum() == 7
            idx = np.searchsorted(summary.bin_edges, 0.0, side="right") - 1
            assert counts[idx] == 7

    def test_constant_offset_statistics(self):
        summary = summarize_campaign(synthetic_results(5, rel=-0.10))
        for k in (2, 3, 4):
            assert summary.mean_scaled[k] == pytest.approx(9.0)
            assert summary.median_scaled[k] == pytest.approx(9.0)
            counts = summary.histograms[k]
            idx = np.searchsorted(summary.bin_edges, -0.10, side="right") - 1
            assert counts[idx] == 5 and counts.sum() == 5

    def test_order_invariance(self):
        results = synthetic_results(6, rel=0.05)
        a = summarize_campaign(results)
        b = summarize_campaign(list(reversed(results)))
        assert a.mean_scaled == b.mean_scaled
        for k in a.histograms:
            np.testing.assert_array_equal(a.histograms[k], b.histograms[k])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize_campaign([])
        with pytest.raises(ValueError):
            summarize_campaign([TrialResult(0, {}, {}, {}, {}, {},
                                            failed=True)])


class TestPersistence:
    def test_round_trip_reproduces_summary(self, tmp_path):
        results = run_1d_campaign(2, 13, search=FAST_SEARCH, n=64,
                                  orders=(1, 2))
        summary = summarize_campaign(results)
        save_campaign(results, summary, tmp_path)
        loaded = load_campaign_csv(tmp_path / "campaign.csv")
        resummary = summarize_campaign(loaded)
        assert resummary.mean_scaled == summary.mean_scaled
        assert resummary.median_scaled == summary.median_scaled
        for k in summary.histograms:
            np.testing.assert_array_equal(resummary.histograms[k],
                                          summary.histograms[k])

    def test_layout(self, tmp_path):
        results = run_1d_campaign(2, 13, search=FAST_SEARCH, n=64,
                                  orders=(1, 2))
        summary = summarize_campaign(results)
        save_campaign(results, summary, tmp_path)
        assert (tmp_path / "campaign.csv").exists()
        assert (tmp_path / "summary.csv").exists()
        assert (tmp_path / "histogram_k2.csv").exists()
        assert (tmp_path / "curves" / "trial0_k1.csv").exists()
        header = (tmp_path / "campaign.csv").read_text().splitlines()[0]
        assert header == "trial_id,k,lambda_opt,rel_error,l2_err"

    def test_svg_histogram(self, tmp_path):
        summary = summarize_campaign(synthetic_results(4))
        path = tmp_path / "h.svg"
        svg_histogram(summary.histograms[2], summary.bin_edges, path,
                      title="t")
        text = path.read_text()
        assert text.startswith("<svg") and text.endswith("</svg>")
        assert "rect" in text


QUICK_SOLVER = SolverConfig(order=1, lam=1.0, outer_max=40)


class TestRun2D:
    def test_rows_and_seminorm_crosscheck(self, tmp_path):
        rows, recons = run_2d_experiment("smooth", 32, 4, lambda1=20.0,
                                         scaled=True, orders=(1, 2),
                                         solver=QUICK_SOLVER)
        labels = [r.label for r in rows]
        assert labels == ["phantom", "baseline", "scaled_k1", "scaled_k2"]
        for r in rows:
            img = recons[r.label]
            for j in range(1, 5):
                expected = pa_seminorm(img, PATransform(j, (32, 32)))
                assert r.seminorms[j] == pytest.approx(expected, rel=1e-12)
        save_2d_experiment(rows, recons, tmp_path)
        assert (tmp_path / "metrics.csv").exists()
        assert (tmp_path / "scaled_k1.csv").exists()
        assert (tmp_path / "phantom.csv").exists()

    def test_scaled_lambdas_follow_rule(self):
        rows, _ = run_2d_experiment("smooth", 32, 4, lambda1=10.0,
                                    scaled=True, orders=(1, 2, 3),
                                    solver=QUICK_SOLVER)
        lams = {r.order: r.lam for r in rows if r.order > 0}
        assert lams == {1: 10.0, 2: 20.0, 3: 40.0}

    def test_unscaled_lambdas_constant(self):
        rows, _ = run_2d_experiment("smooth", 32, 4, lambda1=10.0,
                                    scaled=False, orders=(1, 2),
                                    solver=QUICK_SOLVER)
        lams = {r.order: r.lam for r in rows if r.order > 0}
        assert lams == {1: 10.0, 2: 10.0}

    def test_deterministic_and_jobs_invariant(self):
        a = run_2d_experiment("smooth", 32, 9, lambda1=15.0, scaled=True,
                              orders=(1,), solver=QUICK_SOLVER)
        b = run_2d_experiment("smooth", 32, 9, lambda1=15.0, scaled=True,
                              orders=(1,), solver=QUICK_SOLVER, jobs=2)
        np.testing.assert_array_equal(a[1]["scaled_k1"], b[1]["scaled_k1"])

    def test_unknown_phantom(self):
        with pytest.raises(ValueError):
            run_2d_experiment("brain", 32, 0, lambda1=1.0, scaled=True)

    def test_bad_lambda1(self):
        with pytest.raises(ValueError):
            run_2d_experiment("smooth", 32, 0, lambda1=0.0, scaled=True)
