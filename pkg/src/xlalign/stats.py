"""Correlation, cross-validated regression, exhaustive feature search,
ablation, ANOVA/ANCOVA with effect sizes, Tukey post-hoc, and PCA/PCR.

Cross-validated fits shuffle once with a seeded generator, score the held-out
fold of each split with plain r-squared, average the fold scores, and apply
the adjusted-r-squared penalty a single time with the total sample size and
the model's predictor count. All seeded procedures are reproducible
bit-for-bit for a fixed seed and input.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .special import f_sf, studentized_range_sf


@dataclass(frozen=True)
class RegressionFit:
    """OLS fit summary; ``coefficients[0]`` is the intercept."""

    coefficients: tuple[float, ...]
    r2: float
    adj_r2: float
    n: int
    k: int


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    p_value: float
    eta_p2: float
    df_effect: int
    df_error: int


@dataclass(frozen=True)
class TukeyComparison:
    group_a: str
    group_b: str
    mean_diff: float
    q_stat: float
    p_value: float


@dataclass(frozen=True)
class TukeyResult:
    comparisons: tuple[TukeyComparison, ...]
    ms_within: float
    df_error: int


@dataclass(frozen=True)
class SearchResult:
    best_features: tuple[str, ...]
    best_indices: tuple[int, ...]
    best_adj_r2: float
    n_models: int
    n_skipped: int


@dataclass(frozen=True)
class FeatureSearchReport:
    """Best subset per dependent variable plus appearance tallies."""

    per_dv_best: dict[str, tuple[str, ...]]
    per_dv_adj_r2: dict[str, float]
    tallies: dict[str, int]


@dataclass(frozen=True)
class AblationResult:
    baseline_adj_r2: float
    deltas: dict[str, float]
    ranks: dict[str, int]


@dataclass(frozen=True)
class PCAResult:
    """Principal axes (rows of ``components``), variances, and scores.

    Each component is signed so that its largest-magnitude loading is
    positive; ``scores @ components`` reproduces the centered (and, when
    standardized, scaled) data.
    """

    components: np.ndarray
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    scores: np.ndarray
    mean: np.ndarray
    scale: np.ndarray | None


@dataclass(frozen=True)
class PCRResult:
    adj_r2_by_components: tuple[float, ...]
    best_components: int


def pearson(x, y) -> float:
    """Sample Pearson correlation of two equal-length vectors (n >= 3)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise ValueError("pearson needs at least 3 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise ValueError("zero variance in pearson input")
    return float(np.clip(float(xc @ yc) / denom, -1.0, 1.0))


def semipartial(r12: float, r13: float, r23: float) -> float:
    """Semi-partial correlation r_{1(2.3)}: the covariate (3) is partialled
    out of variable 2 only."""
    if abs(r23) >= 1.0:
        raise ValueError("covariate correlation |r23| must be < 1")
    return (r12 - r13 * r23) / math.sqrt(1.0 - r23 * r23)


def adjusted_r2(r2: float, n: int, k: int) -> float:
    """Adjusted r-squared: 1 - (1 - r2)(n - 1)/(n - k - 1)."""
    if n <= k + 1:
        raise ValueError(f"adjusted r2 undefined for n={n}, k={k}")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k - 1)


def _augment(design: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((design.shape[0], 1)), design])


def ols_fit(design, y) -> RegressionFit:
    """Least-squares fit of ``y`` on ``design`` plus an intercept.

    Solved with an orthogonalization-based routine; rank deficiency is
    reported as an error rather than silently regularized. A constant target
    yields r2 = 0 by convention.
    """
    design = np.asarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if design.ndim != 2 or y.ndim != 1 or design.shape[0] != y.size:
        raise ValueError("design must be n x k and y length n")
    n, k = design.shape
    if n <= k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    aug = _augment(design)
    if np.linalg.matrix_rank(aug) < k + 1:
        raise ValueError("design matrix is rank deficient after intercept augmentation")
    beta, *_ = np.linalg.lstsq(aug, y, rcond=None)
    resid = y - aug @ beta
    sse = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - sse / sst if sst > 0.0 else 0.0
    return RegressionFit(
        coefficients=tuple(beta.tolist()),
        r2=r2,
        adj_r2=adjusted_r2(r2, n, k),
        n=n,
        k=k,
    )


def _cv_folds(n: int, folds: int, seed: int) -> list[np.ndarray]:
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < 2 * folds:
        raise ValueError(f"need n >= 2*folds, got n={n}, folds={folds}")
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), folds)


def _holdout_r2(aug: np.ndarray, y: np.ndarray, test_idx: np.ndarray) -> float:
    mask = np.ones(y.size, dtype=bool)
    mask[test_idx] = False
    beta, *_ = np.linalg.lstsq(aug[mask], y[mask], rcond=None)
    y_te = y[test_idx]
    resid = y_te - aug[test_idx] @ beta
    sse = float(resid @ resid)
    sst = float(((y_te - y_te.mean()) ** 2).sum())
    if sst == 0.0:
        return 1.0 if sse < 1e-24 else 0.0
    return 1.0 - sse / sst


def cv_adjusted_r2(X, y, folds: int, seed: int) -> float:
    """K-fold cross-validated fit: mean held-out r2, then one adjusted-r2
    penalty with the total n and the model's predictor count."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    if n <= k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    aug = _augment(X)
    fold_r2 = [_holdout_r2(aug, y, test_idx) for test_idx in _cv_folds(n, folds, seed)]
    return adjusted_r2(float(np.mean(fold_r2)), n, k)


class _FoldGrams:
    """Per-fold Gram matrices so each feature subset costs O(k^3), not O(n k^2)."""

    def __init__(self, aug: np.ndarray, y: np.ndarray, fold_indices: list[np.ndarray]):
        self.entries = []
        n = y.size
        for test_idx in fold_indices:
            mask = np.ones(n, dtype=bool)
            mask[test_idx] = False
            aug_tr, y_tr = aug[mask], y[mask]
            aug_te, y_te = aug[test_idx], y[test_idx]
            sst = float(((y_te - y_te.mean()) ** 2).sum())
            self.entries.append(
                (
                    aug_tr.T @ aug_tr,
                    aug_tr.T @ y_tr,
                    aug_te.T @ aug_te,
                    aug_te.T @ y_te,
                    float(y_te @ y_te),
                    sst,
                )
            )

    def mean_holdout_r2(self, cols: np.ndarray) -> float:
        total = 0.0
        for g_tr, c_tr, g_te, c_te, yy_te, sst in self.entries:
            beta = np.linalg.solve(g_tr[np.ix_(cols, cols)], c_tr[cols])
            sse = yy_te - 2.0 * float(beta @ c_te[cols]) + float(beta @ g_te[np.ix_(cols, cols)] @ beta)
            sse = max(sse, 0.0)
            if sst == 0.0:
                total += 1.0 if sse < 1e-24 else 0.0
            else:
                total += 1.0 - sse / sst
        return total / len(self.entries)


def _feature_names(names: Sequence[str] | None, k: int) -> tuple[str, ...]:
    if names is None:
        return tuple(f"f{i}" for i in range(k))
    if len(names) != k:
        raise ValueError(f"{len(names)} names for {k} features")
    return tuple(names)


def exhaustive_feature_search(
    X, y, feature_names: Sequence[str] | None = None, folds: int = 10, seed: int = 0
) -> SearchResult:
    """Evaluate every nonempty feature subset by cross-validated adjusted r2.

    Ties break toward the smaller subset, then lexicographic feature order.
    Rank-deficient subsets (e.g. duplicated columns) are skipped and counted.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, k = X.shape
    names = _feature_names(feature_names, k)
    if n <= k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    grams = _FoldGrams(_augment(X), y, _cv_folds(n, folds, seed))

    best_score = -np.inf
    best: tuple[int, ...] | None = None
    n_models = 0
    n_skipped = 0
    for size in range(1, k + 1):
        for subset in itertools.combinations(range(k), size):
            n_models += 1
            cols = np.concatenate([[0], np.asarray(subset) + 1])
            try:
                mean_r2 = grams.mean_holdout_r2(cols)
            except np.linalg.LinAlgError:
                n_skipped += 1
                continue
            score = adjusted_r2(mean_r2, n, size)
            if score > best_score:
                best_score = score
                best = subset
    if best is None:
        raise ValueError("every feature subset was rank deficient")
    return SearchResult(
        best_features=tuple(names[i] for i in best),
        best_indices=best,
        best_adj_r2=float(best_score),
        n_models=n_models,
        n_skipped=n_skipped,
    )


def feature_search_report(
    X,
    dvs: Mapping[str, np.ndarray],
    feature_names: Sequence[str] | None = None,
    folds: int = 10,
    seed: int = 0,
) -> FeatureSearchReport:
    """Run the exhaustive search once per dependent variable and tally how
    often each feature lands in a best-subset list."""
    X = np.asarray(X, dtype=np.float64)
    names = _feature_names(feature_names, X.shape[1])
    per_dv_best: dict[str, tuple[str, ...]] = {}
    per_dv_adj: dict[str, float] = {}
    tallies = {name: 0 for name in names}
    for dv_name, y in dvs.items():
        result = exhaustive_feature_search(X, y, names, folds=folds, seed=seed)
        per_dv_best[dv_name] = result.best_features
        per_dv_adj[dv_name] = result.best_adj_r2
        for feature in result.best_features:
            tallies[feature] += 1
    return FeatureSearchReport(per_dv_best=per_dv_best, per_dv_adj_r2=per_dv_adj, tallies=tallies)


def ablation_single_step(
    X, y, feature_names: Sequence[str] | None = None, folds: int = 10, seed: int = 0
) -> AblationResult:
    """Drop each feature from the full model once and record the fit change.

    ``deltas[f]`` is baseline minus the ablated fit, so features whose removal
    hurts most score highest; rank 1 goes to the largest delta (exact ties
    resolve in feature order).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names = _feature_names(feature_names, X.shape[1])
    baseline = cv_adjusted_r2(X, y, folds, seed)
    deltas = {}
    for i, name in enumerate(names):
        ablated = cv_adjusted_r2(np.delete(X, i, axis=1), y, folds, seed)
        deltas[name] = baseline - ablated
    order = sorted(range(len(names)), key=lambda i: (-deltas[names[i]], i))
    ranks = {names[i]: rank for rank, i in enumerate(order, start=1)}
    return AblationResult(baseline_adj_r2=float(baseline), deltas=deltas, ranks=ranks)


def _as_groups(groups: Sequence) -> list[np.ndarray]:
    arrays = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least 2 groups")
    if any(g.size < 1 for g in arrays):
        raise ValueError("every group needs at least one value")
    if all(g.size < 2 for g in arrays):
        raise ValueError("at least one group needs two or more values")
    return arrays


def anova_oneway(groups: Sequence) -> AnovaResult:
    """One-way ANOVA with partial eta-squared effect size.

    A zero within-group sum of squares with nonzero between-group variance is
    reported as an infinite F statistic with p = 0.
    """
    arrays = _as_groups(groups)
    all_values = np.concatenate(arrays)
    grand = all_values.mean()
    ssb = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in arrays)
    df_effect = len(arrays) - 1
    df_error = all_values.size - len(arrays)
    if ssw == 0.0:
        if ssb > 0.0:
            return AnovaResult(math.inf, 0.0, 1.0, df_effect, df_error)
        return AnovaResult(0.0, 1.0, 0.0, df_effect, df_error)
    f_stat = (ssb / df_effect) / (ssw / df_error)
    return AnovaResult(
        f_stat=float(f_stat),
        p_value=f_sf(float(f_stat), df_effect, df_error),
        eta_p2=float(ssb / (ssb + ssw)),
        df_effect=df_effect,
        df_error=df_error,
    )


def _sse(design: np.ndarray, y: np.ndarray) -> float:
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    return float(resid @ resid)


def ancova(y, factor: Sequence, covariates=None) -> AnovaResult:
    """Type-II ANCOVA for one categorical factor with numeric covariates.

    The factor's sum of squares is the SSE drop from adding its dummy columns
    to the covariate-only model. Levels are dummy-coded in lexicographic
    order with the first level as reference. With no covariates this reduces
    exactly to one-way ANOVA.
    """
    y = np.asarray(y, dtype=np.float64)
    labels = [str(lvl) for lvl in factor]
    if len(labels) != y.size:
        raise ValueError("factor length must match y")
    if covariates is None:
        cov = np.empty((y.size, 0))
    else:
        cov = np.asarray(covariates, dtype=np.float64)
        if cov.ndim == 1:
            cov = cov[:, None]
        if cov.shape[0] != y.size:
            raise ValueError("covariate rows must match y")
    levels = sorted(set(labels))
    if len(levels) < 2:
        raise ValueError("factor needs at least 2 levels")
    reduced = np.hstack([np.ones((y.size, 1)), cov])
    if np.linalg.matrix_rank(reduced) < reduced.shape[1]:
        raise ValueError("covariate matrix is rank deficient with intercept")
    dummies = np.column_stack([[1.0 if lab == lvl else 0.0 for lab in labels] for lvl in levels[1:]])
    full = np.hstack([reduced, dummies])
    if np.linalg.matrix_rank(full) < full.shape[1]:
        raise ValueError("factor dummies are collinear with the covariates")
    df_effect = len(levels) - 1
    df_error = y.size - full.shape[1]
    if df_error < 1:
        raise ValueError("no error degrees of freedom left")
    sse_full = _sse(full, y)
    ss_effect = max(_sse(reduced, y) - sse_full, 0.0)
    if sse_full == 0.0:
        if ss_effect > 0.0:
            return AnovaResult(math.inf, 0.0, 1.0, df_effect, df_error)
        return AnovaResult(0.0, 1.0, 0.0, df_effect, df_error)
    f_stat = (ss_effect / df_effect) / (sse_full / df_error)
    return AnovaResult(
        f_stat=float(f_stat),
        p_value=f_sf(float(f_stat), df_effect, df_error),
        eta_p2=float(ss_effect / (ss_effect + sse_full)),
        df_effect=df_effect,
        df_error=df_error,
    )


def tukey_hsd(groups: Sequence, labels: Sequence[str] | None = None) -> TukeyResult:
    """Pairwise Tukey HSD over the given groups.

    Studentized-range p-values come from numerical quadrature of the
    distribution's standard integral form.
    """
    arrays = _as_groups(groups)
    if labels is None:
        labels = [f"g{i}" for i in range(len(arrays))]
    elif len(labels) != len(arrays):
        raise ValueError("one label per group required")
    df_error = sum(g.size for g in arrays) - len(arrays)
    ssw = sum(float(((g - g.mean()) ** 2).sum()) for g in arrays)
    ms_within = ssw / df_error
    if ms_within == 0.0:
        raise ValueError("zero within-group variance")
    comparisons = []
    k = len(arrays)
    for i in range(k):
        for j in range(i + 1, k):
            gi, gj = arrays[i], arrays[j]
            diff = float(gj.mean() - gi.mean())
            se = math.sqrt(ms_within / 2.0 * (1.0 / gi.size + 1.0 / gj.size))
            q = abs(diff) / se
            comparisons.append(
                TukeyComparison(
                    group_a=str(labels[i]),
                    group_b=str(labels[j]),
                    mean_diff=diff,
                    q_stat=q,
                    p_value=studentized_range_sf(q, k, df_error),
                )
            )
    return TukeyResult(comparisons=tuple(comparisons), ms_within=ms_within, df_error=df_error)


def pca(X, standardize: bool = True) -> PCAResult:
    """PCA via SVD of the centered (optionally z-scored) data matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("PCA needs an n x k matrix with n > 1")
    mean = X.mean(axis=0)
    centered = X - mean
    scale = None
    if standardize:
        scale = centered.std(axis=0, ddof=1)
        if (scale == 0.0).any():
            raise ValueError("zero-variance column cannot be standardized")
        centered = centered / scale
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    # sign convention: largest-magnitude loading of each component positive
    for i in range(vt.shape[0]):
        pivot = int(np.argmax(np.abs(vt[i])))
        if vt[i, pivot] < 0:
            vt[i] = -vt[i]
            u[:, i] = -u[:, i]
    explained = s**2 / (X.shape[0] - 1)
    total = float(explained.sum())
    ratio = explained / total if total > 0 else np.zeros_like(explained)
    return PCAResult(
        components=vt,
        explained_variance=explained,
        explained_variance_ratio=ratio,
        scores=u * s,
        mean=mean,
        scale=scale,
    )


def pcr(X, y, m: int | None = None, folds: int = 10, seed: int = 0) -> PCRResult:
    """Principal component regression: cross-validated adjusted r2 for models
    on the first 1..m standardized components; best_components is the argmax
    (ties toward fewer components)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    decomposition = pca(X, standardize=True)
    available = decomposition.components.shape[0]
    if m is None:
        m = available
    if not 1 <= m <= available:
        raise ValueError(f"m={m} out of range [1, {available}]")
    scores = decomposition.scores
    values = tuple(cv_adjusted_r2(scores[:, :j], y, folds, seed) for j in range(1, m + 1))
    best = int(np.argmax(values)) + 1
    return PCRResult(adj_r2_by_components=values, best_components=best)
