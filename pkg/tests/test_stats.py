import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from xlalign.special import betainc_regularized, f_sf, studentized_range_cdf, studentized_range_sf
from xlalign.stats import (
    ablation_single_step,
    adjusted_r2,
    ancova,
    anova_oneway,
    cv_adjusted_r2,
    exhaustive_feature_search,
    feature_search_report,
    ols_fit,
    pca,
    pcr,
    pearson,
    semipartial,
    tukey_hsd,
)


# ---------------------------------------------------------------- special fns

def test_betainc_against_scipy():
    worst = 0.0
    for a in (0.5, 1.0, 2.5, 6.0, 40.0, 150.0):
        for b in (0.5, 1.0, 3.5, 12.0, 80.0):
            for x in (1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1 - 1e-6):
                worst = max(worst, abs(betainc_regularized(a, b, x) - scipy.special.betainc(a, b, x)))
    assert worst < 1e-10


def test_f_sf_edges():
    assert f_sf(0.0, 3, 10) == 1.0
    assert f_sf(math.inf, 3, 10) == 0.0
    # closed form for df=(1,2): p = 1 - sqrt(f/(f+2)) at f=8 gives 1-sqrt(0.8)
    assert f_sf(8.0, 1, 2) == pytest.approx(1 - math.sqrt(0.8), abs=1e-10)


def test_studentized_range_published_table_value():
    # standard tables: q(alpha=0.05; k=3, df=12) = 3.77
    assert abs(studentized_range_sf(3.77, 3, 12) - 0.05) <= 0.01
    assert studentized_range_cdf(0.0, 3, 12) == 0.0
    assert studentized_range_cdf(50.0, 3, 12) == pytest.approx(1.0, abs=1e-9)


# --------------------------------------------------------------- correlations

def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_pearson_errors():
    with pytest.raises(ValueError, match="zero variance"):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError, match="at least 3"):
        pearson([1, 2], [3, 4])


@settings(max_examples=100)
@given(
    st.integers(min_value=1, max_value=1000),
    st.floats(min_value=0.1, max_value=50.0),
    st.floats(min_value=-5.0, max_value=5.0),
)
def test_pearson_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(20)
    y = rng.standard_normal(20)
    base = pearson(x, y)
    assert pearson(scale * x + shift, y) == pytest.approx(base, abs=1e-9)
    assert pearson(-scale * x, y) == pytest.approx(-base, abs=1e-9)


def test_semipartial_examples():
    assert semipartial(0.4, 0.0, 0.0) == 0.4
    assert semipartial(0.25, 0.5, 0.5) == 0.0
    assert semipartial(0.6, 0.5, 0.5) == pytest.approx(0.4041452, abs=1e-7)
    with pytest.raises(ValueError, match="r23"):
        semipartial(0.5, 0.5, 1.0)


# ----------------------------------------------------------------- regression

def test_ols_noiseless_recovery():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 1))
    y = 3.0 * X[:, 0] + 2.0
    fit = ols_fit(X, y)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.coefficients[1] == pytest.approx(3.0, abs=1e-8)
    assert fit.coefficients[0] == pytest.approx(2.0, abs=1e-8)


def test_ols_constant_target():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 2))
    fit = ols_fit(X, np.full(30, 7.0))
    assert fit.r2 == 0.0
    assert abs(fit.coefficients[1]) < 1e-10 and abs(fit.coefficients[2]) < 1e-10


def test_ols_planted_coefficients():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((200, 2))
    y = 2.0 * X[:, 0] - X[:, 1] + 0.01 * rng.standard_normal(200)
    fit = ols_fit(X, y)
    assert fit.coefficients[1] == pytest.approx(2.0, abs=0.05)
    assert fit.coefficients[2] == pytest.approx(-1.0, abs=0.05)
    assert fit.adj_r2 <= fit.r2


def test_ols_rank_deficiency_reported():
    rng = np.random.default_rng(3)
    col = rng.standard_normal(20)
    X = np.column_stack([col, col])
    with pytest.raises(ValueError, match="rank deficient"):
        ols_fit(X, rng.standard_normal(20))


def test_adjusted_r2_values():
    assert adjusted_r2(1.0, 100, 5) == 1.0
    assert adjusted_r2(0.5, 5050, 13) == pytest.approx(0.4987093, abs=1e-7)
    assert adjusted_r2(0.0, 100, 10) == pytest.approx(-0.1123596, abs=1e-7)
    with pytest.raises(ValueError, match="undefined"):
        adjusted_r2(0.5, 11, 10)


@given(
    st.floats(min_value=-2.0, max_value=0.999),
    st.integers(min_value=1, max_value=20),
    st.integers(min_value=30, max_value=5000),
)
def test_adjusted_r2_penalizes(r2, k, n):
    assert adjusted_r2(r2, n, k) < r2


# ------------------------------------------------------------------------- cv

def test_cv_noiseless_target():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((120, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 4.0
    assert cv_adjusted_r2(X, y, 10, 0) == pytest.approx(1.0, abs=1e-6)


def test_cv_null_data_scores_low():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((500, 13))
    y = rng.standard_normal(500)
    assert cv_adjusted_r2(X, y, 10, 11) <= 0.05


def test_cv_deterministic():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((100, 4))
    y = rng.standard_normal(100)
    assert cv_adjusted_r2(X, y, 10, 3) == cv_adjusted_r2(X, y, 10, 3)


def test_cv_validation():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    with pytest.raises(ValueError, match="2 folds"):
        cv_adjusted_r2(X, y, 1, 0)
    with pytest.raises(ValueError, match="n >= 2"):
        cv_adjusted_r2(X, y, 20, 0)


# --------------------------------------------------------------------- search

def test_search_planted_single_feature():
    # cross-validated subset selection over-selects a little by design, so the
    # planted feature must always be found and noise features mostly rejected
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        X = rng.standard_normal((300, 8))
        y = X[:, 3] + 0.3 * rng.standard_normal(300)
        result = exhaustive_feature_search(X, y, folds=10, seed=seed)
        assert result.n_models == 2**8 - 1
        assert 3 in result.best_indices
        assert len(result.best_indices) <= 3


def test_search_null_data():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((500, 8))
    y = rng.standard_normal(500)
    result = exhaustive_feature_search(X, y, folds=10, seed=11)
    assert result.best_adj_r2 <= 0.05


def test_search_duplicate_features_tie_break():
    rng = np.random.default_rng(12)
    signal = rng.standard_normal(400)
    noise = rng.standard_normal((400, 2))
    X = np.column_stack([signal, signal, noise])  # f0 and f1 identical
    y = signal + 0.1 * rng.standard_normal(400)
    result = exhaustive_feature_search(X, y, folds=10, seed=12)
    assert result.best_indices == (0,)
    assert result.n_skipped > 0  # {f0, f1} and supersets are singular


def test_search_report_tallies():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((200, 4))
    dvs = {
        "m1": X[:, 0] + 0.1 * rng.standard_normal(200),
        "m2": X[:, 0] - X[:, 2] + 0.1 * rng.standard_normal(200),
    }
    report = feature_search_report(X, dvs, ["a", "b", "c", "d"], folds=5, seed=13)
    assert set(report.per_dv_best) == {"m1", "m2"}
    assert all(best for best in report.per_dv_best.values())
    assert sum(report.tallies.values()) == sum(len(v) for v in report.per_dv_best.values())
    assert report.tallies["a"] == 2


# ------------------------------------------------------------------- ablation

def test_ablation_planted_feature_has_largest_delta():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((400, 5))
    y = X[:, 2] + 0.3 * rng.standard_normal(400)
    result = ablation_single_step(X, y, folds=10, seed=14)
    assert result.ranks["f2"] == 1
    assert result.deltas["f2"] > 0


def test_ablation_noise_feature_nonpositive_in_expectation():
    deltas = []
    for seed in range(10):
        rng = np.random.default_rng(40 + seed)
        X = rng.standard_normal((400, 5))
        y = X[:, 0] + 0.3 * rng.standard_normal(400)
        deltas.append(ablation_single_step(X, y, folds=10, seed=seed).deltas["f4"])
    assert np.mean(deltas) <= 0.0


def test_ablation_all_irrelevant_near_zero():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((1000, 13))
    y = rng.standard_normal(1000)
    result = ablation_single_step(X, y, folds=10, seed=12)
    assert max(abs(d) for d in result.deltas.values()) <= 0.02
    assert sorted(result.ranks.values()) == list(range(1, 14))


# ---------------------------------------------------------------------- anova

def test_anova_identical_groups():
    result = anova_oneway([(1.0, 2.0), (1.0, 2.0)])
    assert result.f_stat == 0.0
    assert result.eta_p2 == 0.0


def test_anova_hand_computation():
    result = anova_oneway([(1.0, 2.0), (3.0, 4.0)])
    assert result.f_stat == pytest.approx(8.0, abs=1e-12)
    assert result.eta_p2 == pytest.approx(0.8, abs=1e-12)
    assert (result.df_effect, result.df_error) == (1, 2)
    assert result.p_value == pytest.approx(1 - math.sqrt(0.8), abs=1e-10)


def test_anova_p_matches_independent_incomplete_beta():
    result = anova_oneway([(1.0, 2.0), (3.0, 4.0)])
    oracle = scipy.special.betainc(result.df_error / 2, result.df_effect / 2,
                                   result.df_error / (result.df_error + result.df_effect * result.f_stat))
    assert result.p_value == pytest.approx(oracle, abs=1e-6)


def test_anova_infinite_f_distinguished():
    result = anova_oneway([(1.0, 1.0), (2.0, 2.0)])
    assert math.isinf(result.f_stat)
    assert result.p_value == 0.0
    assert result.eta_p2 == 1.0


def test_anova_affine_invariance():
    rng = np.random.default_rng(15)
    groups = [rng.standard_normal(8) + i for i in range(3)]
    base = anova_oneway(groups)
    moved = anova_oneway([5.0 * g - 3.0 for g in groups])
    assert moved.f_stat == pytest.approx(base.f_stat, rel=1e-10)
    assert moved.eta_p2 == pytest.approx(base.eta_p2, rel=1e-10)


def test_anova_validation():
    with pytest.raises(ValueError, match="2 groups"):
        anova_oneway([(1.0, 2.0)])
    with pytest.raises(ValueError, match="two or more"):
        anova_oneway([(1.0,), (2.0,)])


# --------------------------------------------------------------------- ancova

def test_ancova_matches_anova_without_covariates():
    rng = np.random.default_rng(22)
    g = rng.integers(0, 2, size=300)
    y = 0.5 * g + rng.standard_normal(300)
    plain = anova_oneway([y[g == 0], y[g == 1]])
    adjusted = ancova(y, [str(v) for v in g], None)
    assert adjusted.f_stat == pytest.approx(plain.f_stat, rel=1e-9)
    assert adjusted.eta_p2 == pytest.approx(plain.eta_p2, rel=1e-9)
    assert adjusted.p_value == pytest.approx(plain.p_value, abs=1e-9)
    assert (adjusted.df_effect, adjusted.df_error) == (plain.df_effect, plain.df_error)


def test_ancova_confounded_factor_vanishes():
    rng = np.random.default_rng(21)
    z = rng.standard_normal(400)
    y = 2.0 * z + 0.1 * rng.standard_normal(400)
    labels = ["pos" if v > 0 else "neg" for v in z]
    adjusted = ancova(y, labels, z[:, None])
    plain = anova_oneway([y[np.array(labels) == "pos"], y[np.array(labels) == "neg"]])
    assert plain.eta_p2 > 0.5
    assert adjusted.eta_p2 < 0.05


def test_ancova_independent_covariates_close_to_anova():
    rng = np.random.default_rng(22)
    g = rng.integers(0, 2, size=300)
    y = 0.5 * g + rng.standard_normal(300)
    cov = rng.standard_normal((300, 2))
    plain = anova_oneway([y[g == 0], y[g == 1]])
    adjusted = ancova(y, [str(v) for v in g], cov)
    assert adjusted.f_stat == pytest.approx(plain.f_stat, rel=0.2)


def test_ancova_validation():
    y = np.arange(10.0)
    with pytest.raises(ValueError, match="2 levels"):
        ancova(y, ["a"] * 10, None)
    dup = np.ones((10, 1))
    with pytest.raises(ValueError, match="rank deficient"):
        ancova(y, ["a", "b"] * 5, dup)  # constant covariate collides with intercept
    labels = ["a", "b"] * 5
    collinear = np.array([[1.0 if lab == "b" else 0.0] for lab in labels])
    with pytest.raises(ValueError, match="collinear"):
        ancova(y, labels, collinear)


# ---------------------------------------------------------------------- tukey

def test_tukey_identical_groups():
    result = tukey_hsd([(1.0, 2.0, 3.0), (1.0, 2.0, 3.0)])
    (cmp,) = result.comparisons
    assert cmp.q_stat == 0.0
    assert cmp.p_value == 1.0


def test_tukey_separated_groups():
    rng = np.random.default_rng(30)
    a = np.zeros(3) + 0.01 * rng.standard_normal(3)
    b = np.full(3, 10.0) + 0.01 * rng.standard_normal(3)
    result = tukey_hsd([a, b], labels=["lo", "hi"])
    (cmp,) = result.comparisons
    assert cmp.p_value < 0.01
    assert cmp.mean_diff == pytest.approx(10.0, abs=0.1)


def test_tukey_zero_within_variance():
    with pytest.raises(ValueError, match="zero within-group"):
        tukey_hsd([(1.0, 1.0), (2.0, 2.0)])


def test_tukey_pair_count_and_labels():
    rng = np.random.default_rng(31)
    groups = [rng.standard_normal(6) for _ in range(4)]
    result = tukey_hsd(groups)
    assert len(result.comparisons) == 6
    assert result.comparisons[0].group_a == "g0"


# ------------------------------------------------------------------------ pca

def test_pca_perfect_line():
    t = np.linspace(-2, 2, 40)
    X = np.column_stack([t, t])
    result = pca(X, standardize=False)
    assert result.explained_variance_ratio[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(result.components[0], [math.sqrt(0.5)] * 2, atol=1e-9)


def test_pca_orthonormal_and_reconstruction():
    rng = np.random.default_rng(32)
    X = rng.standard_normal((60, 5))
    result = pca(X, standardize=True)
    gram = result.components @ result.components.T
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-9)
    standardized = (X - result.mean) / result.scale
    np.testing.assert_allclose(result.scores @ result.components, standardized, atol=1e-8)


def test_pca_sign_convention_and_errors():
    rng = np.random.default_rng(33)
    X = rng.standard_normal((40, 4))
    result = pca(X, standardize=False)
    for row in result.components:
        assert row[int(np.argmax(np.abs(row)))] > 0
    X[:, 2] = 5.0
    with pytest.raises(ValueError, match="zero-variance"):
        pca(X, standardize=True)


# ------------------------------------------------------------------------ pcr

def test_pcr_planted_first_direction():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((300, 6))
    X[:, 0] = X[:, 0] * 2 + X[:, 1]
    scores = pca(X, standardize=True).scores
    y = scores[:, 0] + 0.3 * rng.standard_normal(300)
    result = pcr(X, y, folds=10, seed=6)
    assert result.best_components == 1
    assert result.adj_r2_by_components[0] > 0.9


def test_pcr_full_basis_matches_full_feature_cv():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((200, 5))
    y = X @ rng.standard_normal(5) + 0.2 * rng.standard_normal(200)
    result = pcr(X, y, folds=10, seed=7)
    assert result.adj_r2_by_components[-1] == pytest.approx(cv_adjusted_r2(X, y, 10, 7), abs=1e-6)


def test_pcr_training_r2_monotone():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((150, 6))
    y = X @ rng.standard_normal(6) + rng.standard_normal(150)
    scores = pca(X, standardize=True).scores
    r2s = [ols_fit(scores[:, :j], y).r2 for j in range(1, 7)]
    assert all(later >= earlier - 1e-12 for earlier, later in zip(r2s, r2s[1:]))


def test_pcr_m_validation():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    with pytest.raises(ValueError, match="out of range"):
        pcr(X, y, m=4, folds=5, seed=0)
