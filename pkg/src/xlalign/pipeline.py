"""End-to-end orchestration: pair-metric sweeps, feature tables, analysis
reports, and plot-data exports.

A run is driven by a plain ``key = value`` config file (see README). Outputs
are deterministic: pairs are processed in canonical order regardless of the
worker schedule, floats are formatted identically on every run, and JSON is
written with sorted keys, so identical configs and inputs produce
byte-identical files. The ``XLG_THREADS`` environment variable caps the
worker count.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import features as feats
from . import isomorphism as iso
from . import stats
from .corpus import (
    Corpus,
    EmbeddingMatrix,
    LanguageMeta,
    WordOrder,
    align_pair,
    load_corpus,
    load_embeddings,
    load_language_table,
)
from .mining import average_margin, mine_intersection, retrieval_f1

METRIC_NAMES = ("f1", "avg_margin", "svg", "econd_hm", "gh")

ANALYSIS_MODES = ("corr", "search", "ablate", "anova", "ancova", "pca", "pcr", "zero_shot")
STOCHASTIC_MODES = ("search", "ablate", "pcr")

ANOVA_FACTORS = ("same_family", "same_subfamily", "same_word_order", "same_polysynthesis")
ANCOVA_FACTORS = ("same_word_order", "same_polysynthesis")
ANCOVA_COVARIATES = ("combined_sentences", "combined_in_family", "combined_in_subfamily")
SEMIPARTIAL_FEATURES = (
    "combined_in_family",
    "syntactic_dist",
    "phonological_dist",
    "inventory_dist",
    "geographic_dist",
)

_WORD_ORDER_CLASS = {
    WordOrder.SVO: "subject_initial",
    WordOrder.SOV: "subject_initial",
    WordOrder.VSO: "verb_initial",
    WordOrder.VOS: "verb_initial",
    WordOrder.OVS: "object_initial",
    WordOrder.OSV: "object_initial",
}


@dataclass(frozen=True)
class AlignmentMetrics:
    """The five dependent variables for one language pair."""

    f1: float
    avg_margin: float
    svg: float
    econd_hm: float
    gh: float

    def __post_init__(self):
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 outside [0, 1]: {self.f1}")
        if self.svg < 0.0 or self.gh < 0.0:
            raise ValueError("svg and gh must be non-negative")
        if self.econd_hm < 1.0 - 1e-9:
            raise ValueError(f"econd_hm below 1: {self.econd_hm}")

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in METRIC_NAMES}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for an end-to-end run."""

    embeddings: tuple[Path, ...]
    out: Path
    corpus: tuple[Path, ...] = ()
    languages: Path | None = None
    k: int = 4
    gh_max_points: int = 500
    folds: int = 10
    seed: int | None = None
    analyses: tuple[str, ...] = ()
    workers: int = 1
    char_doc: str | None = None
    token_doc: str | None = None

    def __post_init__(self):
        if not self.embeddings:
            raise ValueError("at least one embeddings directory is required")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.gh_max_points < 1:
            raise ValueError("gh_max_points must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = [a for a in self.analyses if a not in ANALYSIS_MODES]
        if unknown:
            raise ValueError(f"unknown analyses: {unknown}")
        if self.seed is None and any(a in STOCHASTIC_MODES for a in self.analyses):
            raise ValueError("seed is required when a stochastic analysis is selected")
        needs_features = [a for a in self.analyses if a != "zero_shot"]
        if needs_features and self.languages is None:
            raise ValueError(f"analyses {needs_features} require a language table")
        if needs_features and not self.corpus:
            raise ValueError(
                f"analyses {needs_features} require corpus directories for the overlap features"
            )
        if "zero_shot" in self.analyses and self.languages is None:
            raise ValueError("zero_shot analysis requires a language table")


def load_config(path: str | Path) -> RunConfig:
    """Parse a ``key = value`` config file (``#`` starts a comment line)."""
    path = Path(path)
    base = path.parent
    raw: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in raw:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value.strip()

    def paths(key: str) -> tuple[Path, ...]:
        if key not in raw:
            return ()
        return tuple(base / p.strip() for p in raw[key].split(",") if p.strip())

    def integer(key: str, default: int) -> int:
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError:
            raise ValueError(f"{path}: {key} must be an integer") from None

    known = {
        "embeddings", "corpus", "languages", "k", "gh_max_points", "folds",
        "seed", "analyses", "out", "workers", "char_doc", "token_doc",
    }
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    if "out" not in raw:
        raise ValueError(f"{path}: missing 'out'")
    analyses = tuple(a.strip() for a in raw.get("analyses", "").split(",") if a.strip())
    return RunConfig(
        embeddings=paths("embeddings"),
        corpus=paths("corpus"),
        languages=(base / raw["languages"]) if raw.get("languages") else None,
        k=integer("k", 4),
        gh_max_points=integer("gh_max_points", 500),
        folds=integer("folds", 10),
        seed=integer("seed", 0) if "seed" in raw else None,
        analyses=analyses,
        out=base / raw["out"],
        workers=integer("workers", 1),
        char_doc=raw.get("char_doc"),
        token_doc=raw.get("token_doc"),
    )


def worker_count(requested: int) -> int:
    """Apply the ``XLG_THREADS`` cap to the requested worker count."""
    cap = os.environ.get("XLG_THREADS")
    if cap is None:
        return max(1, requested)
    try:
        cap_value = int(cap)
    except ValueError:
        raise ValueError(f"XLG_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(requested, cap_value))


def _submatrix(matrix: EmbeddingMatrix, rows: Sequence[int]) -> EmbeddingMatrix:
    return EmbeddingMatrix(
        lang=matrix.lang,
        data=matrix.data[list(rows)],
        ids=tuple(matrix.ids[i] for i in rows),
    )


def compute_pair_metrics(
    mat_a: EmbeddingMatrix, mat_b: EmbeddingMatrix, k: int = 4, gh_max_points: int = 500
) -> AlignmentMetrics:
    """All five metrics for one pair of embedding matrices (one document).

    Retrieval mines over the full matrices (rows outside the gold alignment
    act as distractors); the isomorphism measures are computed on the
    row-aligned submatrices.
    """
    pair = align_pair(mat_a, mat_b)
    mined = mine_intersection(mat_a, mat_b, k)
    f1 = retrieval_f1(mined, pair.gold).f1
    avg = average_margin(pair, k)
    sub_a = _submatrix(mat_a, [i for i, _ in pair.gold])
    sub_b = _submatrix(mat_b, [j for _, j in pair.gold])
    return AlignmentMetrics(
        f1=f1,
        avg_margin=avg,
        svg=iso.svg(sub_a, sub_b),
        econd_hm=iso.econd_hm(sub_a, sub_b),
        gh=iso.gh_distance(sub_a, sub_b, gh_max_points),
    )


def _mean_metrics(per_doc: Sequence[AlignmentMetrics]) -> AlignmentMetrics:
    return AlignmentMetrics(
        **{
            name: float(np.mean([getattr(m, name) for m in per_doc]))
            for name in METRIC_NAMES
        }
    )


@dataclass
class SweepResult:
    """Per-pair metrics plus a record of everything that was skipped."""

    rows: dict[tuple[str, str], AlignmentMetrics]
    failed_languages: dict[str, str] = field(default_factory=dict)
    failed_pairs: dict[tuple[str, str], str] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.failed_languages or self.failed_pairs)


def _embedding_files(directory: Path) -> dict[str, Path]:
    files: dict[str, Path] = {}
    for path in sorted(directory.glob("*.txt")):
        files[path.stem] = path
    for path in sorted(directory.glob("*.xemb")):
        files[path.stem] = path
    return files


def run_pair_metrics(config: RunConfig) -> SweepResult:
    """Compute the five metrics for every unordered language pair.

    With several embedding directories (one per document), metrics are
    averaged per-metric across documents. A language with a missing or
    unreadable file, or a pair whose computation fails, is recorded and
    skipped without aborting the sweep.
    """
    per_dir_files = [_embedding_files(d) for d in config.embeddings]
    all_langs = sorted(set().union(*per_dir_files))
    if not all_langs:
        raise ValueError("no embedding files found")

    result = SweepResult(rows={})
    loaded: dict[tuple[int, str], EmbeddingMatrix] = {}
    usable: list[str] = []
    for lang in all_langs:
        try:
            for doc_index, files in enumerate(per_dir_files):
                if lang not in files:
                    raise ValueError(f"missing embedding file in {config.embeddings[doc_index]}")
                loaded[(doc_index, lang)] = load_embeddings(files[lang], lang=lang)
        except (ValueError, OSError) as exc:
            result.failed_languages[lang] = str(exc)
            continue
        usable.append(lang)

    pairs = list(itertools.combinations(usable, 2))

    def one_pair(pair: tuple[str, str]):
        lang_a, lang_b = pair
        per_doc = [
            compute_pair_metrics(
                loaded[(d, lang_a)], loaded[(d, lang_b)], k=config.k,
                gh_max_points=config.gh_max_points,
            )
            for d in range(len(per_dir_files))
        ]
        return _mean_metrics(per_doc)

    n_workers = worker_count(config.workers)
    outcomes: list[tuple[tuple[str, str], AlignmentMetrics | Exception]] = []
    if n_workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            def guarded(pair):
                try:
                    return pair, one_pair(pair)
                except (ValueError, np.linalg.LinAlgError) as exc:
                    return pair, exc
            outcomes = list(pool.map(guarded, pairs))
    else:
        for pair in pairs:
            try:
                outcomes.append((pair, one_pair(pair)))
            except (ValueError, np.linalg.LinAlgError) as exc:
                outcomes.append((pair, exc))

    for pair, outcome in sorted(outcomes, key=lambda item: item[0]):
        if isinstance(outcome, Exception):
            result.failed_pairs[pair] = str(outcome)
        else:
            result.rows[pair] = outcome
    return result


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_metrics_csv(rows: Mapping[tuple[str, str], AlignmentMetrics], path: str | Path) -> None:
    lines = ["lang_a,lang_b," + ",".join(METRIC_NAMES)]
    for (lang_a, lang_b) in sorted(rows):
        metrics = rows[(lang_a, lang_b)]
        values = ",".join(_fmt(getattr(metrics, name)) for name in METRIC_NAMES)
        lines.append(f"{lang_a},{lang_b},{values}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metrics_csv(path: str | Path) -> dict[tuple[str, str], AlignmentMetrics]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "lang_a,lang_b," + ",".join(METRIC_NAMES):
        raise ValueError(f"{path}: unexpected metrics header")
    rows: dict[tuple[str, str], AlignmentMetrics] = {}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 2 + len(METRIC_NAMES):
            raise ValueError(f"{path}: malformed row {line!r}")
        key = (cells[0], cells[1])
        rows[key] = AlignmentMetrics(**{
            name: float(cells[2 + i]) for i, name in enumerate(METRIC_NAMES)
        })
    return rows


def write_features_csv(
    rows: Mapping[tuple[str, str], feats.PairFeatureVector], path: str | Path
) -> None:
    lines = ["lang_a,lang_b," + ",".join(feats.FEATURE_NAMES)]
    for (lang_a, lang_b) in sorted(rows):
        vector = rows[(lang_a, lang_b)].as_dict()
        cells = []
        for name in feats.FEATURE_NAMES:
            value = vector[name]
            if value is None:
                cells.append("")
            elif isinstance(value, float):
                cells.append(_fmt(value))
            else:
                cells.append(str(value))
        lines.append(f"{lang_a},{lang_b}," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_features_csv(path: str | Path) -> dict[tuple[str, str], dict[str, float | None]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "lang_a,lang_b," + ",".join(feats.FEATURE_NAMES):
        raise ValueError(f"{path}: unexpected features header")
    rows: dict[tuple[str, str], dict[str, float | None]] = {}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 2 + len(feats.FEATURE_NAMES):
            raise ValueError(f"{path}: malformed row {line!r}")
        rows[(cells[0], cells[1])] = {
            name: (float(cells[2 + i]) if cells[2 + i] != "" else None)
            for i, name in enumerate(feats.FEATURE_NAMES)
        }
    return rows


def corpus_texts(corpus: Corpus) -> dict[str, str]:
    """Concatenate each document's verses (in verse-ID order) into one text."""
    return {
        lang: "\n".join(text for _, text in sorted(verses.items()))
        for lang, verses in corpus.documents.items()
    }


def build_pair_feature_table(
    table: Mapping[str, LanguageMeta],
    char_texts: Mapping[str, str] | None = None,
    token_texts: Mapping[str, str] | None = None,
    languages: Sequence[str] | None = None,
) -> dict[tuple[str, str], feats.PairFeatureVector]:
    """Feature vectors for every unordered pair of languages in the table."""
    aggregates = feats.training_aggregates(table)
    langs = sorted(languages) if languages is not None else sorted(table)
    missing = [lang for lang in langs if lang not in table]
    if missing:
        raise ValueError(f"languages missing from table: {missing}")
    return {
        (a, b): feats.pair_features(table[a], table[b], aggregates, char_texts, token_texts)
        for a, b in itertools.combinations(langs, 2)
    }


@dataclass
class AnalysisDataset:
    """Joined, listwise-complete design matrix for the analysis modes."""

    pairs: list[tuple[str, str]]
    X: np.ndarray
    dvs: dict[str, np.ndarray]
    n_common: int
    n_used: int

    @property
    def n_dropped(self) -> int:
        return self.n_common - self.n_used


def make_analysis_dataset(
    features_map: Mapping[tuple[str, str], Mapping[str, float | None]],
    metrics_map: Mapping[tuple[str, str], AlignmentMetrics],
) -> AnalysisDataset:
    """Join features and metrics on the pair key and drop incomplete rows
    listwise (the dropped count is reported, never silently imputed)."""
    common = sorted(set(features_map) & set(metrics_map))
    if not common:
        raise ValueError("no pairs shared between features and metrics")
    kept: list[tuple[str, str]] = []
    rows: list[list[float]] = []
    for pair in common:
        vector = features_map[pair]
        values = [vector[name] for name in feats.FEATURE_NAMES]
        if any(v is None for v in values):
            continue
        kept.append(pair)
        rows.append([float(v) for v in values])
    if not kept:
        raise ValueError("every pair has at least one missing feature")
    X = np.array(rows, dtype=np.float64)
    dvs = {
        name: np.array([getattr(metrics_map[p], name) for p in kept], dtype=np.float64)
        for name in METRIC_NAMES
    }
    return AnalysisDataset(pairs=kept, X=X, dvs=dvs, n_common=len(common), n_used=len(kept))


def _safe_pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    try:
        return stats.pearson(x, y)
    except ValueError:
        return None


def analyze_corr(dataset: AnalysisDataset) -> dict:
    """Pearson correlations of every feature with every metric, plus
    semi-partial correlations holding combined training data constant for
    the dependent variable."""
    names = feats.FEATURE_NAMES
    pearson_block: dict[str, dict[str, float | None]] = {}
    semi_block: dict[str, dict[str, float | None]] = {}
    comb = dataset.X[:, names.index("combined_sentences")]
    for metric, y in dataset.dvs.items():
        pearson_block[metric] = {
            name: _safe_pearson(dataset.X[:, i], y) for i, name in enumerate(names)
        }
        r_comb_y = _safe_pearson(comb, y)
        semi: dict[str, float | None] = {}
        for name in SEMIPARTIAL_FEATURES:
            col = dataset.X[:, names.index(name)]
            r_fy = _safe_pearson(col, y)
            r_fc = _safe_pearson(col, comb)
            if None in (r_fy, r_fc, r_comb_y) or abs(r_comb_y) >= 1.0:
                semi[name] = None
            else:
                semi[name] = stats.semipartial(r_fy, r_fc, r_comb_y)
        semi_block[metric] = semi
    return {
        "mode": "corr",
        "n_pairs": dataset.n_common,
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "pearson": pearson_block,
        "semipartial_vs_combined_sentences": semi_block,
    }


def analyze_search(dataset: AnalysisDataset, folds: int, seed: int) -> dict:
    report = stats.feature_search_report(
        dataset.X, dataset.dvs, feats.FEATURE_NAMES, folds=folds, seed=seed
    )
    per_dv = {
        dv: {
            "best_features": list(report.per_dv_best[dv]),
            "adj_r2": report.per_dv_adj_r2[dv],
        }
        for dv in report.per_dv_best
    }
    return {
        "mode": "search",
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "folds": folds,
        "seed": seed,
        "n_models_per_dv": 2 ** len(feats.FEATURE_NAMES) - 1,
        "per_dv": per_dv,
        "tallies": dict(report.tallies),
    }


def analyze_ablate(dataset: AnalysisDataset, folds: int, seed: int) -> dict:
    per_dv = {}
    rank_sums = {name: 0.0 for name in feats.FEATURE_NAMES}
    for metric, y in dataset.dvs.items():
        result = stats.ablation_single_step(dataset.X, y, feats.FEATURE_NAMES, folds=folds, seed=seed)
        per_dv[metric] = {
            "baseline_adj_r2": result.baseline_adj_r2,
            "delta_adj_r2": dict(result.deltas),
            "rank": dict(result.ranks),
        }
        for name in feats.FEATURE_NAMES:
            rank_sums[name] += result.ranks[name]
    average_rank = {name: rank_sums[name] / len(dataset.dvs) for name in feats.FEATURE_NAMES}
    ranking = sorted(feats.FEATURE_NAMES, key=lambda name: (average_rank[name], name))
    return {
        "mode": "ablate",
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "folds": folds,
        "seed": seed,
        "per_dv": per_dv,
        "average_rank": average_rank,
        "ranking": ranking,
    }


def _anova_json(result: stats.AnovaResult) -> dict:
    finite = math.isfinite(result.f_stat)
    return {
        "f_stat": result.f_stat if finite else None,
        "infinite_f": not finite,
        "p_value": result.p_value,
        "eta_p2": result.eta_p2,
        "df_effect": result.df_effect,
        "df_error": result.df_error,
    }


def _binary_groups(dataset: AnalysisDataset, factor: str, y: np.ndarray):
    col = dataset.X[:, feats.FEATURE_NAMES.index(factor)]
    levels = sorted(set(col.tolist()))
    groups = [y[col == level] for level in levels]
    labels = [_fmt(level) if level % 1 else str(int(level)) for level in levels]
    return labels, groups


def analyze_anova(dataset: AnalysisDataset) -> dict:
    """One-way ANOVA of each metric grouped by each binary pair feature,
    with Tukey HSD comparisons where the test is defined."""
    factors: dict[str, dict] = {}
    for factor in ANOVA_FACTORS:
        per_metric: dict[str, dict] = {}
        for metric, y in dataset.dvs.items():
            labels, groups = _binary_groups(dataset, factor, y)
            if len(groups) < 2:
                per_metric[metric] = {"skipped": f"factor {factor} has a single level"}
                continue
            entry = _anova_json(stats.anova_oneway(groups))
            entry["group_means"] = {
                label: float(np.mean(group)) for label, group in zip(labels, groups)
            }
            entry["group_sizes"] = {label: int(group.size) for label, group in zip(labels, groups)}
            try:
                tukey = stats.tukey_hsd(groups, labels)
                entry["tukey"] = [
                    {
                        "group_a": c.group_a,
                        "group_b": c.group_b,
                        "mean_diff": c.mean_diff,
                        "q_stat": c.q_stat,
                        "p_value": c.p_value,
                    }
                    for c in tukey.comparisons
                ]
            except ValueError:
                entry["tukey"] = None
            per_metric[metric] = entry
        factors[factor] = per_metric
    return {
        "mode": "anova",
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "factors": factors,
    }


def analyze_ancova(dataset: AnalysisDataset) -> dict:
    """ANCOVA of word-order and polysynthesis agreement with the three
    training-data features as covariates."""
    cov_idx = [feats.FEATURE_NAMES.index(name) for name in ANCOVA_COVARIATES]
    covariates = dataset.X[:, cov_idx]
    factors: dict[str, dict] = {}
    for factor in ANCOVA_FACTORS:
        col = dataset.X[:, feats.FEATURE_NAMES.index(factor)]
        labels = [str(int(v)) for v in col]
        per_metric: dict[str, dict] = {}
        for metric, y in dataset.dvs.items():
            if len(set(labels)) < 2:
                per_metric[metric] = {"skipped": f"factor {factor} has a single level"}
                continue
            try:
                per_metric[metric] = _anova_json(stats.ancova(y, labels, covariates))
            except ValueError as exc:
                per_metric[metric] = {"skipped": str(exc)}
        factors[factor] = per_metric
    return {
        "mode": "ancova",
        "covariates": list(ANCOVA_COVARIATES),
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "factors": factors,
    }


def _varying_columns(dataset: AnalysisDataset) -> tuple[list[str], np.ndarray]:
    # standardization is undefined for constant columns; drop and report them
    keep = [name for i, name in enumerate(feats.FEATURE_NAMES) if dataset.X[:, i].std() > 0.0]
    idx = [feats.FEATURE_NAMES.index(name) for name in keep]
    return keep, dataset.X[:, idx]


def analyze_pca(dataset: AnalysisDataset) -> dict:
    names, X = _varying_columns(dataset)
    if len(names) < 2:
        raise ValueError("fewer than two varying features; PCA not meaningful")
    result = stats.pca(X, standardize=True)
    loadings = {
        name: [float(result.components[c, i]) for c in range(result.components.shape[0])]
        for i, name in enumerate(names)
    }
    return {
        "mode": "pca",
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "constant_features": [n for n in feats.FEATURE_NAMES if n not in names],
        "explained_variance": [float(v) for v in result.explained_variance],
        "explained_variance_ratio": [float(v) for v in result.explained_variance_ratio],
        "loadings": loadings,
    }


def analyze_pcr(dataset: AnalysisDataset, folds: int, seed: int) -> dict:
    names, X = _varying_columns(dataset)
    if len(names) < 1:
        raise ValueError("no varying features; PCR not meaningful")
    per_dv = {}
    best_values = []
    for metric, y in dataset.dvs.items():
        result = stats.pcr(X, y, folds=folds, seed=seed)
        per_dv[metric] = {
            "adj_r2_by_components": [float(v) for v in result.adj_r2_by_components],
            "best_components": result.best_components,
        }
        best_values.append(result.best_components)
    return {
        "mode": "pcr",
        "n_used": dataset.n_used,
        "n_dropped": dataset.n_dropped,
        "constant_features": [n for n in feats.FEATURE_NAMES if n not in names],
        "folds": folds,
        "seed": seed,
        "per_dv": per_dv,
        "average_best_components": float(np.mean(best_values)),
    }


def word_order_class(order: WordOrder) -> str | None:
    """Initial-constituent class (verb/subject/object-initial), None if unknown."""
    return _WORD_ORDER_CLASS.get(order)


def group_metrics_by_word_order_class(
    metrics_map: Mapping[tuple[str, str], AlignmentMetrics],
    table: Mapping[str, LanguageMeta],
) -> dict:
    """Split pairs into similar vs different word-order-class groups and
    average each metric per group. Pairs with an unknown class are excluded."""
    groups: dict[str, list[AlignmentMetrics]] = {"similar": [], "different": []}
    excluded = 0
    for (lang_a, lang_b), metrics in metrics_map.items():
        meta_a = table.get(lang_a)
        meta_b = table.get(lang_b)
        cls_a = word_order_class(meta_a.word_order) if meta_a else None
        cls_b = word_order_class(meta_b.word_order) if meta_b else None
        if cls_a is None or cls_b is None:
            excluded += 1
            continue
        groups["similar" if cls_a == cls_b else "different"].append(metrics)
    out: dict = {"excluded_pairs": excluded}
    for label, members in groups.items():
        if members:
            out[label] = {
                "n_pairs": len(members),
                "means": {
                    name: float(np.mean([getattr(m, name) for m in members]))
                    for name in METRIC_NAMES
                },
            }
        else:
            out[label] = {"n_pairs": 0, "means": None}
    return out


def run_zero_shot_analysis(
    metrics_map: Mapping[tuple[str, str], AlignmentMetrics],
    table: Mapping[str, LanguageMeta],
    features_map: Mapping[tuple[str, str], Mapping[str, float | None]] | None = None,
) -> dict:
    """Analyses over the zero-shot partitions.

    Simple case: languages with no training data; per-language metrics are
    grouped by word order, polysynthesis, and family, and tested with ANOVA
    (plus Tukey for word order). Double case: pairs whose members both lack
    training data; features are correlated with metrics over those pairs.
    An empty partition is reported as skipped rather than an error.
    """
    report: dict = {"mode": "zero_shot"}
    known_pairs = {
        pair: m for pair, m in metrics_map.items() if pair[0] in table and pair[1] in table
    }
    report["n_pairs_unknown_language"] = len(metrics_map) - len(known_pairs)

    zs_langs = sorted(
        {
            lang
            for pair in known_pairs
            for lang in pair
            if table[lang].train_sentences == 0
        }
    )
    simple: dict = {"n_languages": len(zs_langs), "languages": zs_langs}
    if not zs_langs:
        simple["skipped"] = "no zero-shot languages"
    else:
        per_lang = feats.per_language_metrics(known_pairs)
        rows = {lang: per_lang[lang] for lang in zs_langs if lang in per_lang}
        factor_values = {
            "word_order": {
                lang: table[lang].word_order.value
                for lang in rows
                if table[lang].word_order != WordOrder.UNKNOWN
            },
            "polysynthetic": {lang: str(int(table[lang].polysynthetic)) for lang in rows},
            "family": {lang: table[lang].family for lang in rows},
        }
        anova_block: dict = {}
        means_block: dict = {}
        for factor, value_of in factor_values.items():
            levels = sorted(set(value_of.values()))
            grouped = {
                level: [lang for lang in value_of if value_of[lang] == level]
                for level in levels
            }
            means_block[factor] = {
                level: {
                    name: float(np.mean([getattr(rows[lang], name) for lang in langs]))
                    for name in METRIC_NAMES
                }
                for level, langs in grouped.items()
            }
            per_metric: dict = {}
            for name in METRIC_NAMES:
                groups = [
                    [getattr(rows[lang], name) for lang in grouped[level]] for level in levels
                ]
                try:
                    entry = _anova_json(stats.anova_oneway(groups))
                except ValueError as exc:
                    per_metric[name] = {"skipped": str(exc)}
                    continue
                if factor == "word_order":
                    try:
                        tukey = stats.tukey_hsd(groups, levels)
                        entry["tukey"] = [
                            {
                                "group_a": c.group_a,
                                "group_b": c.group_b,
                                "mean_diff": c.mean_diff,
                                "q_stat": c.q_stat,
                                "p_value": c.p_value,
                            }
                            for c in tukey.comparisons
                        ]
                    except ValueError:
                        entry["tukey"] = None
                per_metric[name] = entry
            anova_block[factor] = per_metric
        simple["anova"] = anova_block
        simple["group_means"] = means_block
    report["simple"] = simple

    double_pairs = sorted(
        pair
        for pair in known_pairs
        if table[pair[0]].train_sentences == 0 and table[pair[1]].train_sentences == 0
    )
    double: dict = {"n_pairs": len(double_pairs)}
    if not double_pairs:
        double["skipped"] = "no double zero-shot pairs"
    elif features_map is None:
        double["skipped"] = "no feature table supplied"
    else:
        correlations: dict = {}
        for name in METRIC_NAMES:
            y = np.array([getattr(known_pairs[p], name) for p in double_pairs])
            per_feature: dict[str, float | None] = {}
            for feature in feats.FEATURE_NAMES:
                xs, ys = [], []
                for pair, value in zip(double_pairs, y):
                    fv = features_map.get(pair, {}).get(feature)
                    if fv is not None:
                        xs.append(float(fv))
                        ys.append(float(value))
                per_feature[feature] = (
                    _safe_pearson(np.array(xs), np.array(ys)) if len(xs) >= 3 else None
                )
            correlations[name] = per_feature
        double["pearson"] = correlations
    report["double"] = double
    return report


def run_case_study_compare(
    metrics_a: Mapping[tuple[str, str], AlignmentMetrics],
    metrics_b: Mapping[tuple[str, str], AlignmentMetrics],
    table: Mapping[str, LanguageMeta] | None = None,
) -> dict:
    """Side-by-side comparison of two metric runs over the same pair set.

    Deltas are B minus A per pair and per metric. When a language table is
    given, word-order-class group means are reported for both sides as well.
    """
    if set(metrics_a) != set(metrics_b):
        only_a = sorted(set(metrics_a) - set(metrics_b))[:3]
        only_b = sorted(set(metrics_b) - set(metrics_a))[:3]
        raise ValueError(f"pair sets differ (A-only {only_a}, B-only {only_b})")
    pairs = sorted(metrics_a)
    per_pair = []
    for lang_a, lang_b in pairs:
        ma = metrics_a[(lang_a, lang_b)]
        mb = metrics_b[(lang_a, lang_b)]
        per_pair.append(
            {
                "lang_a": lang_a,
                "lang_b": lang_b,
                **{name: float(getattr(mb, name) - getattr(ma, name)) for name in METRIC_NAMES},
            }
        )
    def means(metrics_map):
        return {
            name: float(np.mean([getattr(m, name) for m in metrics_map.values()]))
            for name in METRIC_NAMES
        }
    report = {
        "mode": "compare",
        "n_pairs": len(pairs),
        "mean_a": means(metrics_a),
        "mean_b": means(metrics_b),
        "mean_delta": {
            name: float(
                np.mean([row[name] for row in per_pair])
            )
            for name in METRIC_NAMES
        },
        "per_pair_delta": per_pair,
    }
    if table is not None:
        report["word_order_groups"] = {
            "a": group_metrics_by_word_order_class(metrics_a, table),
            "b": group_metrics_by_word_order_class(metrics_b, table),
        }
    else:
        report["word_order_groups"] = None
    return report


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8"
    )


def write_plot_csv(rows: Sequence[tuple], header: Sequence[str], path: str | Path) -> None:
    """Plain x/y/group plot data for external plotting tools."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _zero_shot_plot_rows(report: dict) -> list[tuple]:
    rows: list[tuple] = []
    means = report.get("simple", {}).get("group_means", {})
    for factor in sorted(means):
        for level in sorted(means[factor]):
            for metric in METRIC_NAMES:
                rows.append((factor, level, metric, means[factor][level][metric]))
    return rows


def run_report(config: RunConfig) -> int:
    """Full pipeline: sweep metrics, derive features, run analyses, write
    everything under ``config.out``. Returns the process exit code (0 ok,
    2 when some languages or pairs were skipped)."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    sweep = run_pair_metrics(config)
    write_metrics_csv(sweep.rows, out / "metrics.csv")

    table = load_language_table(config.languages) if config.languages else None
    features_map = None
    if table is not None:
        corpora = [load_corpus(d) for d in config.corpus]
        texts = {c.name: corpus_texts(c) for c in corpora}
        char_texts = token_texts = None
        if corpora:
            names = [c.name for c in corpora]
            char_name = config.char_doc or names[0]
            token_name = config.token_doc or names[-1]
            if char_name not in texts or token_name not in texts:
                raise ValueError(f"char_doc/token_doc must be one of {names}")
            char_texts = texts[char_name]
            token_texts = texts[token_name]
        langs = sorted({lang for pair in sweep.rows for lang in pair} & set(table))
        features_map = build_pair_feature_table(table, char_texts, token_texts, langs)
        write_features_csv(features_map, out / "features.csv")

    analyses_run = []
    for mode in dict.fromkeys(config.analyses):
        if mode == "zero_shot":
            feature_rows = (
                {pair: vec.as_dict() for pair, vec in features_map.items()}
                if features_map
                else None
            )
            report = run_zero_shot_analysis(sweep.rows, table, feature_rows)
            write_json(report, out / "analysis_zero_shot.json")
            write_plot_csv(
                _zero_shot_plot_rows(report),
                ("factor", "level", "metric", "mean"),
                out / "plot_zero_shot_groups.csv",
            )
        else:
            feature_rows = {pair: vec.as_dict() for pair, vec in features_map.items()}
            dataset = make_analysis_dataset(feature_rows, sweep.rows)
            if mode == "corr":
                report = analyze_corr(dataset)
            elif mode == "search":
                report = analyze_search(dataset, config.folds, config.seed)
            elif mode == "ablate":
                report = analyze_ablate(dataset, config.folds, config.seed)
            elif mode == "anova":
                report = analyze_anova(dataset)
            elif mode == "ancova":
                report = analyze_ancova(dataset)
            elif mode == "pca":
                report = analyze_pca(dataset)
            elif mode == "pcr":
                report = analyze_pcr(dataset, config.folds, config.seed)
            else:  # pragma: no cover - guarded by RunConfig validation
                raise ValueError(f"unknown analysis mode {mode!r}")
            write_json(report, out / f"analysis_{mode}.json")
        analyses_run.append(mode)

    summary = {
        "mode": "summary",
        "languages": sorted({lang for pair in sweep.rows for lang in pair}),
        "n_pairs": len(sweep.rows),
        "failed_languages": {k: v for k, v in sorted(sweep.failed_languages.items())},
        "failed_pairs": {f"{a}/{b}": v for (a, b), v in sorted(sweep.failed_pairs.items())},
        "analyses": analyses_run,
        "k": config.k,
        "gh_max_points": config.gh_max_points,
        "folds": config.folds,
        "seed": config.seed,
    }
    write_json(summary, out / "run_summary.json")
    return 2 if sweep.partial else 0


_ANOVA_ENTRY_SCHEMA = {
    "type": "object",
    "properties": {
        "f_stat": {"type": ["number", "null"]},
        "infinite_f": {"type": "boolean"},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "eta_p2": {"type": "number", "minimum": 0, "maximum": 1},
        "df_effect": {"type": "integer"},
        "df_error": {"type": "integer"},
    },
    "required": ["f_stat", "p_value", "eta_p2", "df_effect", "df_error"],
}

REPORT_SCHEMAS: dict[str, dict] = {
    "corr": {
        "type": "object",
        "required": ["mode", "n_pairs", "n_used", "n_dropped", "pearson",
                      "semipartial_vs_combined_sentences"],
        "properties": {
            "mode": {"const": "corr"},
            "n_pairs": {"type": "integer"},
            "n_used": {"type": "integer"},
            "n_dropped": {"type": "integer"},
            "pearson": {"type": "object"},
            "semipartial_vs_combined_sentences": {"type": "object"},
        },
    },
    "search": {
        "type": "object",
        "required": ["mode", "n_used", "folds", "seed", "n_models_per_dv", "per_dv", "tallies"],
        "properties": {
            "mode": {"const": "search"},
            "n_models_per_dv": {"const": 8191},
            "per_dv": {"type": "object"},
            "tallies": {"type": "object"},
        },
    },
    "ablate": {
        "type": "object",
        "required": ["mode", "n_used", "folds", "seed", "per_dv", "average_rank", "ranking"],
        "properties": {
            "mode": {"const": "ablate"},
            "per_dv": {"type": "object"},
            "average_rank": {"type": "object"},
            "ranking": {"type": "array", "items": {"type": "string"}},
        },
    },
    "anova": {
        "type": "object",
        "required": ["mode", "n_used", "factors"],
        "properties": {"mode": {"const": "anova"}, "factors": {"type": "object"}},
    },
    "ancova": {
        "type": "object",
        "required": ["mode", "covariates", "n_used", "factors"],
        "properties": {
            "mode": {"const": "ancova"},
            "covariates": {"type": "array", "items": {"type": "string"}},
            "factors": {"type": "object"},
        },
    },
    "pca": {
        "type": "object",
        "required": ["mode", "n_used", "explained_variance",
                      "explained_variance_ratio", "loadings"],
        "properties": {
            "mode": {"const": "pca"},
            "explained_variance": {"type": "array", "items": {"type": "number"}},
            "explained_variance_ratio": {"type": "array", "items": {"type": "number"}},
            "loadings": {"type": "object"},
        },
    },
    "pcr": {
        "type": "object",
        "required": ["mode", "n_used", "folds", "seed", "per_dv", "average_best_components"],
        "properties": {
            "mode": {"const": "pcr"},
            "per_dv": {"type": "object"},
            "average_best_components": {"type": "number"},
        },
    },
    "zero_shot": {
        "type": "object",
        "required": ["mode", "simple", "double"],
        "properties": {
            "mode": {"const": "zero_shot"},
            "simple": {"type": "object"},
            "double": {"type": "object"},
        },
    },
    "compare": {
        "type": "object",
        "required": ["mode", "n_pairs", "mean_a", "mean_b", "mean_delta",
                      "per_pair_delta", "word_order_groups"],
        "properties": {
            "mode": {"const": "compare"},
            "n_pairs": {"type": "integer"},
            "per_pair_delta": {"type": "array"},
            "word_order_groups": {"type": ["object", "null"]},
        },
    },
    "summary": {
        "type": "object",
        "required": ["mode", "languages", "n_pairs", "failed_languages",
                      "failed_pairs", "analyses"],
        "properties": {
            "mode": {"const": "summary"},
            "languages": {"type": "array", "items": {"type": "string"}},
            "n_pairs": {"type": "integer"},
        },
    },
    "anova_entry": _ANOVA_ENTRY_SCHEMA,
}
