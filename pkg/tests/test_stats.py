"""Tests for the statistical helpers: correlation, rank agreement, Welch
comparisons, and the sensitivity roll-up."""

import math

import numpy as np
import pytest
import scipy.stats

from dcgeval.errors import UndefinedStatisticError
from dcgeval.stats import (
    COMPARISON_HEADER,
    ComparisonResult,
    compare_means,
    comparison_csv_row,
    kendall_tau,
    normal_cdf,
    normal_quantile,
    pearson_p_two_tailed,
    pearson_r,
    sensitivity_summary,
    student_t_cdf,
)


class TestNormalDistribution:
    def test_cdf_reference_points(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
        assert normal_cdf(-1.0) + normal_cdf(1.0) == pytest.approx(1.0, abs=1e-15)

    def test_quantile_reference_points(self):
        assert normal_quantile(0.5) == 0.0
        assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_quantile_inverts_cdf(self):
        for p in (0.01, 0.2, 0.5, 0.9, 0.995):
            assert normal_cdf(normal_quantile(p)) == pytest.approx(p, abs=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
    def test_quantile_domain(self, p):
        with pytest.raises(ValueError):
            normal_quantile(p)


class TestStudentTCdf:
    def test_one_degree_of_freedom_is_the_cauchy_cdf(self):
        for t in (-3.0, -1.0, 0.0, 0.5, 2.0):
            assert student_t_cdf(t, 1) == pytest.approx(0.5 + math.atan(t) / math.pi, rel=1e-14)

    def test_two_degrees_of_freedom_closed_form(self):
        for t in (-2.0, -0.5, 1.0, 4.0):
            expected = 0.5 * (1.0 + t / math.sqrt(2.0 + t * t))
            assert student_t_cdf(t, 2) == pytest.approx(expected, rel=1e-14)

    def test_zero_is_the_median_exactly(self):
        assert student_t_cdf(0.0, 7) == 0.5

    def test_high_df_approaches_the_normal(self):
        assert student_t_cdf(1.5, 100000) == pytest.approx(normal_cdf(1.5), abs=1e-5)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            t = float(rng.normal(0.0, 2.0))
            df = int(rng.integers(1, 40))
            assert student_t_cdf(t, df) == pytest.approx(
                float(scipy.stats.t.cdf(t, df)), rel=1e-12, abs=1e-14
            )

    def test_df_must_be_positive(self):
        with pytest.raises(ValueError):
            student_t_cdf(1.0, 0)


class TestPearson:
    def test_perfect_linear_relations(self):
        assert pearson_r([1.0, 2.0, 3.0], [10.0, 20.0, 30.0]) == 1.0
        assert pearson_r([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == -1.0

    def test_hand_worked_correlation(self):
        # deviations x: (-1, 0, 1), y: (-1/3, 2/3, -1/3) -> r = sqrt(3)/2 ... no:
        # x = (1,2,3), y = (1,2,2): sxy = 1, sxx = 2, syy = 2/3 -> r = sqrt(3)/2
        assert pearson_r([1.0, 2.0, 3.0], [1.0, 2.0, 2.0]) == pytest.approx(
            math.sqrt(3.0) / 2.0, rel=1e-12
        )

    def test_constant_series_is_undefined(self):
        with pytest.raises(UndefinedStatisticError, match="constant"):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(UndefinedStatisticError, match="constant"):
            pearson_r([1.0, 2.0, 3.0], [5.0, 5.0, 5.0])

    def test_input_validation(self):
        with pytest.raises(ValueError, match="lengths"):
            pearson_r([1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError, match="at least"):
            pearson_r([1.0], [1.0])
        with pytest.raises(ValueError, match="NaN"):
            pearson_r([1.0, math.nan, 3.0], [1.0, 2.0, 3.0])

    def test_frozen_p_value(self):
        assert pearson_p_two_tailed(0.8, 5) == 0.10408803866182778

    def test_p_value_edge_cases(self):
        assert pearson_p_two_tailed(0.0, 10) == pytest.approx(1.0, abs=1e-14)
        assert pearson_p_two_tailed(1.0, 5) == 0.0
        assert pearson_p_two_tailed(-1.0, 5) == 0.0
        with pytest.raises(ValueError):
            pearson_p_two_tailed(0.5, 2)
        with pytest.raises(ValueError):
            pearson_p_two_tailed(1.5, 5)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            n = int(rng.integers(4, 30))
            x = rng.normal(size=n)
            y = 0.6 * x + rng.normal(size=n)
            ref = scipy.stats.pearsonr(x, y)
            r = pearson_r(x, y)
            assert r == pytest.approx(float(ref.statistic), rel=1e-12, abs=1e-12)
            assert pearson_p_two_tailed(r, n) == pytest.approx(
                float(ref.pvalue), rel=1e-9, abs=1e-12
            )


class TestKendallTau:
    def test_single_swap_is_exactly_one_third(self):
        # 3 pairs, 2 concordant, 1 discordant: tau = 1/3 with no rounding
        assert kendall_tau([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]) == 1 / 3

    def test_perfect_agreement_and_reversal(self):
        assert kendall_tau([1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 5.0, 9.0]) == 1.0
        assert kendall_tau([1.0, 2.0, 3.0, 4.0], [9.0, 5.0, 3.0, 2.0]) == -1.0

    def test_tie_corrected_hand_value(self):
        # pairs: one x-tie, five concordant -> 5 / sqrt(5 * 6)
        got = kendall_tau([1.0, 1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 4.0])
        assert got == pytest.approx(5.0 / math.sqrt(30.0), rel=1e-15)

    def test_all_ties_is_undefined(self):
        with pytest.raises(UndefinedStatisticError, match="ties"):
            kendall_tau([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])

    def test_matches_reference_implementation_with_ties(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(4, 25))
            x = rng.integers(0, 6, size=n).astype(float)
            y = rng.integers(0, 6, size=n).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            ref = scipy.stats.kendalltau(x, y, variant="b").statistic
            assert kendall_tau(x, y) == pytest.approx(float(ref), rel=1e-10, abs=1e-12)


class TestCompareMeans:
    def test_frozen_welch_example(self):
        got = compare_means([1.0, 2.0, 3.0, 4.0], [4.0, 5.0, 7.0, 8.0], 0.05, "ex")
        assert got.mean_diff == 3.5
        assert got.ci_low == 1.3086936485585459
        assert got.ci_high == 5.691306351441455
        assert got.p_one_sided == 0.0008725593497644346
        assert got.significant is True
        assert got.label == "ex"

    def test_unit_spread_arms_hit_the_textbook_interval(self):
        """Arms built to have mean difference 2 and standard error 1/2 pin the
        99% interval at 2 -+ 2.5758... / 2."""
        got = compare_means([-0.3, 0.3], [1.6, 2.4], 0.01)
        z = normal_quantile(0.995)
        assert got.mean_diff == 2.0
        assert got.ci_low == pytest.approx(2.0 - z * 0.5, abs=1e-12)
        assert got.ci_high == pytest.approx(2.0 + z * 0.5, abs=1e-12)
        assert got.ci_low == pytest.approx(0.712, abs=1e-3)
        assert got.ci_high == pytest.approx(3.288, abs=1e-3)

    def test_ci_matches_hand_formula(self):
        rng = np.random.default_rng(31)
        a = rng.normal(0.0, 1.0, size=50)
        b = rng.normal(0.4, 2.0, size=80)
        got = compare_means(a, b, 0.1)
        se = math.sqrt(np.var(a, ddof=1) / 50 + np.var(b, ddof=1) / 80)
        z = normal_quantile(0.95)
        diff = float(np.mean(b) - np.mean(a))
        assert got.ci_low == pytest.approx(diff - z * se, rel=1e-14)
        assert got.ci_high == pytest.approx(diff + z * se, rel=1e-14)
        assert got.p_one_sided == pytest.approx(normal_cdf(-diff / se), rel=1e-14)

    def test_direction_flips_with_the_arms(self):
        a = [1.0, 2.0, 3.0]
        b = [5.0, 6.0, 7.0]
        fwd = compare_means(a, b, 0.05)
        rev = compare_means(b, a, 0.05)
        assert fwd.mean_diff == -rev.mean_diff
        assert fwd.p_one_sided + rev.p_one_sided == pytest.approx(1.0, abs=1e-12)

    def test_significance_requires_the_whole_ci_above_zero(self):
        a = [0.0, 1.0, 2.0, 3.0]
        b = [0.5, 1.5, 2.5, 3.5]  # diff 0.5, wide CI
        got = compare_means(a, b, 0.05)
        assert got.mean_diff == 0.5
        assert got.ci_low < 0.0
        assert got.significant is False

    def test_degenerate_zero_spread(self):
        up = compare_means([1.0, 1.0], [2.0, 2.0], 0.05)
        assert (up.mean_diff, up.ci_low, up.ci_high) == (1.0, 1.0, 1.0)
        assert up.p_one_sided == 0.0 and up.significant is True
        flat = compare_means([1.0, 1.0], [1.0, 1.0], 0.05)
        assert flat.p_one_sided == 0.5 and flat.significant is False
        down = compare_means([2.0, 2.0], [1.0, 1.0], 0.05)
        assert down.p_one_sided == 1.0 and down.significant is False

    def test_input_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            compare_means([1.0, 2.0], [1.0, 2.0], 1.0)
        with pytest.raises(ValueError, match="at least"):
            compare_means([1.0], [1.0, 2.0], 0.05)

    def test_interval_coverage_is_near_nominal(self):
        """Monte-Carlo check that the alpha = 0.01 interval covers the true
        difference at essentially its nominal rate for desk-scale arms."""
        rng = np.random.default_rng(20240229)
        true_diff = 0.3
        n_sims, n = 5000, 400
        covered = 0
        for _ in range(n_sims):
            a = rng.normal(1.0, 1.0, size=n)
            b = rng.normal(1.0 + true_diff, 1.5, size=n)
            got = compare_means(a, b, 0.01)
            covered += got.ci_low <= true_diff <= got.ci_high
        assert covered / n_sims >= 0.985


class TestSensitivitySummary:
    def _result(self, diff, p, significant):
        return ComparisonResult(
            label="r", mean_diff=diff, ci_low=diff - 1.0, ci_high=diff + 1.0,
            p_one_sided=p, significant=significant,
        )

    def test_counts_detections_signs_and_mean_p(self):
        results = [
            self._result(0.5, 0.001, True),
            self._result(0.2, 0.20, False),
            self._result(-0.1, 0.70, False),
        ]
        got = sensitivity_summary(results, all_true_positive=True)
        assert got.tpr == pytest.approx(1 / 3)
        assert got.sign_agreement == pytest.approx(2 / 3)
        assert got.mean_p == pytest.approx((0.001 + 0.20 + 0.70) / 3)
        assert got.n_comparisons == 3

    def test_refuses_unverified_ground_truth(self):
        with pytest.raises(ValueError, match="true positive"):
            sensitivity_summary([self._result(0.5, 0.01, True)], all_true_positive=False)

    def test_refuses_empty_input(self):
        with pytest.raises(ValueError, match="at least one"):
            sensitivity_summary([], all_true_positive=True)


class TestComparisonCsv:
    def test_header_and_row(self):
        assert COMPARISON_HEADER == "label,mean_diff,ci_low,ci_high,p_one_sided,significant"
        row = comparison_csv_row(
            ComparisonResult(
                label="armB_vs_armA", mean_diff=0.25, ci_low=0.1, ci_high=0.4,
                p_one_sided=0.0012, significant=True,
            )
        )
        assert row == "armB_vs_armA,0.25,0.1,0.4,0.0012,true"
