from __future__ import annotations

import math

import numpy as np
import pytest

import hrctrack as ht
from conftest import rng_for
from reference_impl import ref_auc_pairs, ref_roc_points


def curve_points(curve: ht.RocCurve) -> list[tuple[float, float]]:
    return list(zip(curve.p_fa.tolist(), curve.p_d.tolist()))


class TestNullLoglik:
    def test_single_point_uniform_clutter(self):
        grid = ht.GridSpec(2, 2)
        model = ht.SingleObsModel(
            epsilon=1.0, noise=ht.NoiseModel(0.0), clutter=ht.ClutterModel.uniform(4)
        )
        pts = grid.centers()[np.array([0, 3, 1])][:, None, :]
        # each exact-center report carries clutter mass 1/N
        assert ht.null_loglik(pts, model, grid) == pytest.approx(3 * math.log(0.25), abs=1e-12)

    def test_multi_point_scan(self):
        grid = ht.GridSpec(8, 8)
        model = ht.MultiObsModel(
            count=3, lambda0=0.2, noise=ht.NoiseModel(0.0),
            clutter=ht.ClutterModel.uniform(64),
        )
        rng = rng_for(401)
        cells = rng.integers(0, 64, size=(5, 3))
        pts = grid.centers()[cells]
        want = 5 * 3 * math.log(1.0 / 64)
        assert ht.null_loglik(pts, model, grid) == pytest.approx(want, abs=1e-10)

    def test_impossible_point_is_minus_inf(self):
        grid = ht.GridSpec(2, 2)
        model = ht.SingleObsModel(
            epsilon=0.5, noise=ht.NoiseModel(0.0), clutter=ht.ClutterModel.uniform(4)
        )
        pts = np.array([[[50.0, 50.0]]])
        assert ht.null_loglik(pts, model, grid) == -np.inf

    def test_equals_filter_loglik_when_all_clutter(self):
        grid = ht.GridSpec(2, 2)
        a = ht.build_random_walk(grid, 0.4)
        pi = ht.endpoints_mixture(grid, 0.5)
        family = ht.bridges_from_base_closed_form(a, 4, pi)
        model = ht.SingleObsModel(
            epsilon=1.0, noise=ht.NoiseModel(0.8), clutter=ht.ClutterModel.uniform(4)
        )
        rng = rng_for(402)
        pts = ht.generate_clutter_sequence(rng, 5, model, grid)
        out = ht.hrc_filter(pi, family, ht.likelihood_table(pts, model, grid))
        null = ht.null_loglik(pts, model, grid)
        assert out.loglik == pytest.approx(null, abs=1e-10)
        assert ht.log_likelihood_ratio(out.loglik, null) == pytest.approx(0.0, abs=1e-10)


class TestRocCurve:
    def test_perfectly_separated(self):
        curve = ht.roc_from_scores([3.0, 4.0, 5.0], [0.0, 1.0, 2.0])
        assert ht.auc(curve) == 1.0
        assert curve_points(curve)[0] == (0.0, 0.0)
        assert curve_points(curve)[-1] == (1.0, 1.0)

    def test_identical_samples_are_chance(self):
        scores = [0.3, 1.2, 2.2, 0.3]
        curve = ht.roc_from_scores(scores, scores)
        assert ht.auc(curve) == pytest.approx(0.5, abs=1e-15)
        assert np.array_equal(curve.p_fa, curve.p_d)

    def test_hand_built_four_scores(self):
        # strict '>' declaration: the staircase lifts one step below each
        # distinct score value
        curve = ht.roc_from_scores([3.0, 2.0], [1.0, 0.0])
        assert curve.thresholds.tolist() == [np.inf, 3.0, 2.0, 1.0, 0.0, -np.inf]
        assert curve_points(curve) == [
            (0.0, 0.0), (0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0),
        ]
        assert ht.auc(curve) == 1.0

    def test_rates_nondecreasing(self):
        rng = rng_for(403)
        alt = rng.normal(1.0, 1.0, 200)
        null = rng.normal(0.0, 1.0, 150)
        curve = ht.roc_from_scores(alt, null)
        assert np.all(np.diff(curve.p_fa) >= 0)
        assert np.all(np.diff(curve.p_d) >= 0)
        assert curve.n_alt == 200 and curve.n_null == 150

    def test_matches_reference_with_ties(self):
        rng = rng_for(404)
        alt = rng.integers(0, 6, 80).astype(float)  # heavy ties
        null = rng.integers(0, 6, 60).astype(float)
        curve = ht.roc_from_scores(alt, null)
        assert ht.roc_to_rows(curve) == ref_roc_points(alt, null)

    def test_minus_inf_scores_still_reach_corner(self):
        # The -inf sentinel means "always declare", so the curve ends at
        # (1, 1) even when some scores are themselves -inf; the rank form
        # still resolves those scores individually.
        curve = ht.roc_from_scores([1.0, -np.inf], [-np.inf, -np.inf])
        assert curve_points(curve)[-1] == (1.0, 1.0)
        assert ht.auc(curve) == 0.5
        assert ht.auc_u_statistic([1.0, -np.inf], [-np.inf, -np.inf]) == 0.75

    def test_empty_and_nan_rejected(self):
        with pytest.raises(ValueError):
            ht.roc_from_scores([], [1.0])
        with pytest.raises(ValueError):
            ht.roc_from_scores([1.0], [])
        with pytest.raises(ValueError):
            ht.roc_from_scores([np.nan], [1.0])

    def test_roc_to_rows(self):
        curve = ht.roc_from_scores([2.0], [1.0])
        rows = ht.roc_to_rows(curve)
        assert rows[0] == (np.inf, 0.0, 0.0)
        assert all(len(r) == 3 for r in rows)


class TestAuc:
    def test_trapezoid_equals_rank_statistic(self):
        rng = rng_for(405)
        for _ in range(10):
            alt = rng.normal(0.5, 1.0, 64)
            null = rng.normal(0.0, 1.0, 48)
            curve = ht.roc_from_scores(alt, null)
            assert ht.auc(curve) == pytest.approx(ht.auc_u_statistic(alt, null), abs=1e-12)

    def test_rank_statistic_with_ties(self):
        rng = rng_for(406)
        alt = rng.integers(0, 4, 30).astype(float)
        null = rng.integers(0, 4, 20).astype(float)
        assert ht.auc_u_statistic(alt, null) == pytest.approx(
            ref_auc_pairs(alt, null), abs=1e-12
        )
        curve = ht.roc_from_scores(alt, null)
        assert ht.auc(curve) == pytest.approx(ref_auc_pairs(alt, null), abs=1e-12)

    def test_delta_auc_self_is_zero(self):
        rng = rng_for(407)
        alt = rng.normal(1.0, 1.0, 40)
        null = rng.normal(0.0, 1.0, 40)
        curve = ht.roc_from_scores(alt, null)
        assert ht.delta_auc(curve, curve) == 0.0

    def test_null_vs_null_is_chance(self):
        rng = rng_for(408)
        n = 4000
        alt = rng.normal(0.0, 1.0, n)
        null = rng.normal(0.0, 1.0, n)
        got = ht.auc_u_statistic(alt, null)
        se = math.sqrt(1.0 / 12 * (1 / n + 1 / n))  # normal-approx U spread
        assert abs(got - 0.5) <= 3 * se


class TestOperatingPoint:
    def test_zero_threshold_on_curve(self):
        alt = np.array([2.0, -1.0, 0.5])
        null = np.array([0.0, -2.0, 1.5])
        p_fa, p_d = ht.operating_point(alt, null, 0.0)
        assert (p_fa, p_d) == (1.0 / 3, 2.0 / 3)
        curve = ht.roc_from_scores(alt, null)
        idx = curve.thresholds.tolist().index(0.0)
        assert (curve.p_fa[idx], curve.p_d[idx]) == (p_fa, p_d)

    def test_strictness(self):
        # scores equal to the threshold are not declared
        p_fa, p_d = ht.operating_point([1.0, 2.0], [1.0, 1.0], 1.0)
        assert p_fa == 0.0 and p_d == 0.5


class TestBootstrap:
    def test_auc_se_deterministic_given_rng(self):
        rng = rng_for(409)
        alt = rng.normal(1.0, 1.0, 60)
        null = rng.normal(0.0, 1.0, 60)
        a = ht.bootstrap_auc_se(alt, null, n_boot=100, rng=np.random.default_rng(5))
        b = ht.bootstrap_auc_se(alt, null, n_boot=100, rng=np.random.default_rng(5))
        assert a == b and a > 0

    def test_se_shrinks_with_sample_size(self):
        rng = rng_for(410)
        small_alt, small_null = rng.normal(0.7, 1, 30), rng.normal(0, 1, 30)
        big_alt, big_null = rng.normal(0.7, 1, 3000), rng.normal(0, 1, 3000)
        se_small = ht.bootstrap_auc_se(small_alt, small_null, rng=np.random.default_rng(6))
        se_big = ht.bootstrap_auc_se(big_alt, big_null, rng=np.random.default_rng(6))
        assert se_big < se_small / 3

    def test_delta_se_paired_beats_independent(self):
        # Strongly correlated detectors: the paired resample nearly cancels,
        # so the delta spread is far below either marginal spread.
        rng = rng_for(411)
        base_alt = rng.normal(1.0, 1.0, 200)
        base_null = rng.normal(0.0, 1.0, 200)
        alt_b = base_alt + rng.normal(0.0, 0.01, 200)
        null_b = base_null + rng.normal(0.0, 0.01, 200)
        delta_se = ht.bootstrap_delta_auc_se(
            base_alt, base_null, alt_b, null_b, rng=np.random.default_rng(7)
        )
        single_se = ht.bootstrap_auc_se(base_alt, base_null, rng=np.random.default_rng(7))
        assert delta_se < single_se / 2

    def test_delta_identical_scores_zero(self):
        rng = rng_for(412)
        alt = rng.normal(1.0, 1.0, 50)
        null = rng.normal(0.0, 1.0, 50)
        assert ht.bootstrap_delta_auc_se(alt, null, alt, null) == 0.0

    def test_misaligned_pairs_rejected(self):
        with pytest.raises(ValueError):
            ht.bootstrap_delta_auc_se([1.0, 2.0], [0.0], [1.0], [0.0])


class TestEndToEndScores:
    def test_noiseless_on_path_ratio(self):
        # Exact reports along the true path with no clutter: the alternative
        # explains every point with probability 1, the null must pay the
        # uniform cell mass per point.
        grid = ht.GridSpec(8, 8)
        a = ht.build_random_walk(grid, 0.5)
        start = grid.state_index(1, 1)
        dest = grid.state_index(8, 8)
        pi = np.zeros((64, 64))
        pi[start, dest] = 1.0
        horizon = 7
        family = ht.bridges_from_base_closed_form(a, horizon, pi)
        model = ht.SingleObsModel(
            epsilon=0.0, noise=ht.NoiseModel(0.0), clutter=ht.ClutterModel.uniform(64)
        )
        rng = rng_for(413)
        path = ht.sample_rc_path(rng, pi, family)
        pts = ht.generate_single_sequence(rng, path, model, grid)
        out = ht.hrc_filter(pi, family, ht.likelihood_table(pts, model, grid))
        null = ht.null_loglik(pts, model, grid)
        assert out.loglik == pytest.approx(0.0, abs=1e-12)
        assert ht.log_likelihood_ratio(out.loglik, null) == pytest.approx(
            (horizon + 1) * math.log(64.0), abs=1e-12
        )

    def test_multi_scan_noiseless_null(self):
        grid = ht.GridSpec(4, 4)
        model = ht.MultiObsModel(
            count=2, lambda0=0.3, noise=ht.NoiseModel(0.0),
            clutter=ht.ClutterModel.uniform(16),
        )
        rng = rng_for(414)
        pts = ht.generate_clutter_sequence(rng, 6, model, grid)
        want = 6 * 2 * math.log(1.0 / 16)
        assert ht.null_loglik(pts, model, grid) == pytest.approx(want, abs=1e-12)

    def test_detector_spec_validation(self):
        assert ht.DetectorSpec(alternative="hrc").alternative == "hrc"
        with pytest.raises(ValueError):
            ht.DetectorSpec(alternative="kalman")
