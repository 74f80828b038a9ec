"""Cross-lingual sentence-embedding alignment and isomorphism toolkit.

Quantifies how well the per-language subspaces of a shared sentence-embedding
space align (bitext-retrieval F1, average margin score) and how isomorphic
they are (singular value gap, effective-condition-number harmonic mean, and a
Gromov-Hausdorff proxy via bottleneck distance), then relates those metrics to
linguistic and training-data predictors with a battery of statistical
analyses.
"""

from .corpus import (
    BitextPair,
    Corpus,
    EmbeddingMatrix,
    LanguageMeta,
    WordOrder,
    align_pair,
    load_corpus,
    load_embeddings,
    load_language_table,
    save_embeddings,
)
from .features import (
    FEATURE_NAMES,
    LanguageFeatureVector,
    PairFeatureVector,
    language_features,
    multiset_jaccard,
    pair_features,
    per_language_metrics,
    training_aggregates,
    typological_distance,
)
from .isomorphism import (
    PersistenceDiagram,
    SingularSpectrum,
    bottleneck_distance,
    econd_hm,
    effective_condition_number,
    effective_rank,
    gh_distance,
    persistence_diagram_0d,
    singular_values,
    svg,
)
from .knn import NeighborList, cosine, knn_search
from .mining import (
    Direction,
    MinedAlignment,
    RetrievalScore,
    average_margin,
    margin_score,
    mine_backward,
    mine_direction,
    mine_intersection,
    retrieval_f1,
)
from .pipeline import (
    AlignmentMetrics,
    METRIC_NAMES,
    RunConfig,
    compute_pair_metrics,
    group_metrics_by_word_order_class,
    load_config,
    run_case_study_compare,
    run_pair_metrics,
    run_report,
    run_zero_shot_analysis,
    word_order_class,
)
from .stats import (
    AnovaResult,
    RegressionFit,
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

__version__ = "0.1.0"
