"""Language-pair predictors: training-data aggregates, phylogeny/typology
agreement flags, text overlaps, and typological cosine distances.

Missing inputs (absent typological vectors, unavailable texts) surface as
``None`` fields rather than imputed zeros; downstream fits drop incomplete
rows listwise.
"""

from __future__ import annotations

import dataclasses
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .corpus import LanguageMeta, WordOrder
from .knn import cosine

FEATURE_NAMES = (
    "combined_sentences",
    "combined_in_family",
    "combined_in_subfamily",
    "same_family",
    "same_subfamily",
    "same_word_order",
    "same_polysynthesis",
    "token_overlap",
    "char_overlap",
    "syntactic_dist",
    "phonological_dist",
    "inventory_dist",
    "geographic_dist",
)

_DIST_FIELDS = {
    "syntax": "syntactic_dist",
    "phonology": "phonological_dist",
    "inventory": "inventory_dist",
    "geography": "geographic_dist",
}


class TrainingCounts(NamedTuple):
    in_family: int
    in_subfamily: int


@dataclass(frozen=True)
class PairFeatureVector:
    """The 13 predictors for one language pair. ``None`` marks missing data."""

    combined_sentences: int
    combined_in_family: int
    combined_in_subfamily: int
    same_family: int
    same_subfamily: int
    same_word_order: int
    same_polysynthesis: int
    token_overlap: float | None
    char_overlap: float | None
    syntactic_dist: float | None
    phonological_dist: float | None
    inventory_dist: float | None
    geographic_dist: float | None

    def __post_init__(self):
        for name in ("combined_sentences", "combined_in_family", "combined_in_subfamily"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.combined_in_subfamily > self.combined_in_family:
            raise ValueError("combined_in_subfamily exceeds combined_in_family")
        for name in ("same_family", "same_subfamily", "same_word_order", "same_polysynthesis"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")
        for name in ("token_overlap", "char_overlap"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0 + 1e-9:
                raise ValueError(f"{name} outside [0, 1]")
        for name in _DIST_FIELDS.values():
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 2.0 + 1e-9:
                raise ValueError(f"{name} outside [0, 2]")

    def as_dict(self) -> dict[str, float | int | None]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}


@dataclass(frozen=True)
class LanguageFeatureVector:
    """Per-language predictors for individual-language analyses."""

    family: str
    subfamily: str
    word_order: WordOrder
    polysynthetic: bool
    train_sentences: int
    in_family_sentences: int
    in_subfamily_sentences: int

    def __post_init__(self):
        if self.in_family_sentences < self.train_sentences:
            raise ValueError("in_family_sentences below the language's own count")


def multiset_jaccard(a: str, b: str, unit: str) -> float:
    """Weighted Jaccard overlap of two texts.

    ``unit="char"`` counts Unicode code points of the NFC-normalized text,
    whitespace excluded; ``unit="token"`` counts whitespace-split tokens of
    pre-tokenized input. The score is the ratio of summed per-element minimum
    counts to summed maximum counts.
    """
    if unit == "char":
        items_a = [c for c in unicodedata.normalize("NFC", a) if not c.isspace()]
        items_b = [c for c in unicodedata.normalize("NFC", b) if not c.isspace()]
    elif unit == "token":
        items_a = a.split()
        items_b = b.split()
    else:
        raise ValueError(f"unknown overlap unit {unit!r}")
    if not items_a or not items_b:
        raise ValueError(f"text empty after {unit} segmentation")
    count_a = Counter(items_a)
    count_b = Counter(items_b)
    intersection = sum(min(count_a[e], count_b[e]) for e in count_a.keys() & count_b.keys())
    union = sum(max(count_a[e], count_b[e]) for e in count_a.keys() | count_b.keys())
    return intersection / union


def typological_distance(va, vb) -> float:
    """Cosine distance (1 - cosine similarity) between two typology vectors."""
    va = np.asarray(va, dtype=np.float64)
    vb = np.asarray(vb, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"vector dimension mismatch: {va.shape} vs {vb.shape}")
    return 1.0 - cosine(va, vb)


def training_aggregates(table: Mapping[str, LanguageMeta]) -> dict[str, TrainingCounts]:
    """In-family and in-subfamily training totals for every language.

    Subfamilies are keyed by (family, subfamily) so a subfamily total can
    never exceed its family total.
    """
    family_sums: dict[str, int] = {}
    subfamily_sums: dict[tuple[str, str], int] = {}
    for meta in table.values():
        family_sums[meta.family] = family_sums.get(meta.family, 0) + meta.train_sentences
        key = (meta.family, meta.subfamily)
        subfamily_sums[key] = subfamily_sums.get(key, 0) + meta.train_sentences
    return {
        lang: TrainingCounts(
            in_family=family_sums[meta.family],
            in_subfamily=subfamily_sums[(meta.family, meta.subfamily)],
        )
        for lang, meta in table.items()
    }


def language_features(table: Mapping[str, LanguageMeta]) -> dict[str, LanguageFeatureVector]:
    """Per-language feature vectors with training aggregates filled in."""
    aggregates = training_aggregates(table)
    return {
        lang: LanguageFeatureVector(
            family=meta.family,
            subfamily=meta.subfamily,
            word_order=meta.word_order,
            polysynthetic=meta.polysynthetic,
            train_sentences=meta.train_sentences,
            in_family_sentences=aggregates[lang].in_family,
            in_subfamily_sentences=aggregates[lang].in_subfamily,
        )
        for lang, meta in table.items()
    }


def pair_features(
    ma: LanguageMeta,
    mb: LanguageMeta,
    aggregates: Mapping[str, TrainingCounts],
    char_texts: Mapping[str, str] | None = None,
    token_texts: Mapping[str, str] | None = None,
) -> PairFeatureVector:
    """Derive the 13-feature vector for one language pair.

    Word-order agreement requires both orders to be known: an UNKNOWN operand
    never counts as agreement, not even with another UNKNOWN. Overlap features
    are computed only when both languages have text in the given mapping.
    """
    agg_a = aggregates[ma.lang]
    agg_b = aggregates[mb.lang]

    def overlap(texts: Mapping[str, str] | None, unit: str) -> float | None:
        if texts is None or ma.lang not in texts or mb.lang not in texts:
            return None
        return multiset_jaccard(texts[ma.lang], texts[mb.lang], unit)

    def distance(kind: str) -> float | None:
        va = ma.typo_vectors.get(kind)
        vb = mb.typo_vectors.get(kind)
        if va is None or vb is None:
            return None
        return typological_distance(va, vb)

    same_word_order = int(
        ma.word_order != WordOrder.UNKNOWN
        and mb.word_order != WordOrder.UNKNOWN
        and ma.word_order == mb.word_order
    )
    return PairFeatureVector(
        combined_sentences=ma.train_sentences + mb.train_sentences,
        combined_in_family=agg_a.in_family + agg_b.in_family,
        combined_in_subfamily=agg_a.in_subfamily + agg_b.in_subfamily,
        same_family=int(ma.family == mb.family),
        same_subfamily=int(ma.family == mb.family and ma.subfamily == mb.subfamily),
        same_word_order=same_word_order,
        same_polysynthesis=int(ma.polysynthetic == mb.polysynthetic),
        token_overlap=overlap(token_texts, "token"),
        char_overlap=overlap(char_texts, "char"),
        syntactic_dist=distance("syntax"),
        phonological_dist=distance("phonology"),
        inventory_dist=distance("inventory"),
        geographic_dist=distance("geography"),
    )


def per_language_metrics(pair_metrics: Mapping[tuple[str, str], object]) -> dict[str, object]:
    """Average pair-level metrics into per-language metrics.

    Works on any dataclass of float fields; each language's value is the
    arithmetic mean over all pairs it appears in.
    """
    if not pair_metrics:
        raise ValueError("no pair metrics given")
    sample = next(iter(pair_metrics.values()))
    names = [f.name for f in dataclasses.fields(sample)]
    sums: dict[str, dict[str, float]] = {}
    counts: dict[str, int] = {}
    for (lang_a, lang_b), metrics in pair_metrics.items():
        for lang in (lang_a, lang_b):
            entry = sums.setdefault(lang, {name: 0.0 for name in names})
            for name in names:
                entry[name] += float(getattr(metrics, name))
            counts[lang] = counts.get(lang, 0) + 1
    cls = type(sample)
    return {
        lang: cls(**{name: sums[lang][name] / counts[lang] for name in names})
        for lang in sums
    }
