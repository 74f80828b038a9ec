"""Margin-score bitext mining: directional search, intersection, and scoring.

The margin score of a candidate pair relativizes its cosine similarity by the
mean similarity of each side's k nearest neighbors:

    margin(x, y) = 2k cos(x, y) / (sum_{z in NN_k(x)} cos(x, z)
                                   + sum_{z in NN_k(y)} cos(y, z))

Mining runs in both directions and the intersection of the two pair sets is
the retrieved alignment, which is scored as F1 against a gold alignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .corpus import BitextPair, EmbeddingMatrix
from .knn import NeighborList, _knn_topk, cosine, unit_rows

_DENOM_FLOOR = 1e-12


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    INTERSECTION = "intersection"


@dataclass(frozen=True)
class MinedAlignment:
    """Mined (row_a, row_b, margin) triples for one mining direction."""

    pairs: tuple[tuple[int, int, float], ...]
    direction: Direction

    def __post_init__(self):
        rows_a = [a for a, _, _ in self.pairs]
        rows_b = [b for _, b, _ in self.pairs]
        if self.direction in (Direction.FORWARD, Direction.INTERSECTION):
            if len(set(rows_a)) != len(rows_a):
                raise ValueError("duplicate source row in mined pairs")
        if self.direction in (Direction.BACKWARD, Direction.INTERSECTION):
            if len(set(rows_b)) != len(rows_b):
                raise ValueError("duplicate target row in mined pairs")
        if not all(np.isfinite(s) for _, _, s in self.pairs):
            raise ValueError("non-finite margin score")

    def pair_set(self) -> set[tuple[int, int]]:
        return {(a, b) for a, b, _ in self.pairs}


@dataclass(frozen=True)
class RetrievalScore:
    """Precision/recall/F1 of a mined alignment against gold pairs."""

    precision: float
    recall: float
    f1: float
    n_gold: int
    n_mined: int
    n_correct: int


def margin_score(x_row, y_row, nn_x: NeighborList, nn_y: NeighborList, k: int) -> float:
    """Margin score of the pair (x, y) given each side's k-NN list.

    ``nn_x`` must hold x's neighbors in the opposite space and vice versa,
    each of length exactly ``k``.
    """
    if len(nn_x.neighbors) != k or len(nn_y.neighbors) != k:
        raise ValueError(f"neighbor lists must hold exactly k={k} entries")
    denom = sum(c for _, c in nn_x.neighbors) + sum(c for _, c in nn_y.neighbors)
    if denom <= _DENOM_FLOOR:
        raise ValueError(f"margin denominator {denom} is degenerate (all-orthogonal neighborhoods)")
    return 2.0 * k * cosine(x_row, y_row) / denom


def _mine_arrays(src_unit: np.ndarray, tgt_unit: np.ndarray, k: int) -> list[tuple[int, int, float]]:
    cand_idx, cand_sim = _knn_topk(src_unit, tgt_unit, k)
    src_sums = cand_sim.sum(axis=1)
    _, back_sim = _knn_topk(tgt_unit, src_unit, k)
    tgt_sums = back_sim.sum(axis=1)

    denom = src_sums[:, None] + tgt_sums[cand_idx]
    if (denom <= _DENOM_FLOOR).any():
        raise ValueError("margin denominator is degenerate (all-orthogonal neighborhoods)")
    margins = 2.0 * k * cand_sim / denom

    pairs = []
    for i in range(src_unit.shape[0]):
        best = np.lexsort((cand_idx[i], -margins[i]))[0]
        pairs.append((i, int(cand_idx[i, best]), float(margins[i, best])))
    return pairs


def mine_direction(src: EmbeddingMatrix, tgt: EmbeddingMatrix, k: int) -> MinedAlignment:
    """Mine one pair per source row: the margin-score maximizer among its k
    cosine-nearest targets (ties toward the lower target index)."""
    if src.dim != tgt.dim:
        raise ValueError(f"dimension mismatch: {src.dim} vs {tgt.dim}")
    if not 1 <= k <= min(src.n_rows, tgt.n_rows):
        raise ValueError(f"k={k} out of range [1, {min(src.n_rows, tgt.n_rows)}]")
    pairs = _mine_arrays(unit_rows(src.data), unit_rows(tgt.data), k)
    return MinedAlignment(pairs=tuple(pairs), direction=Direction.FORWARD)


def mine_backward(src: EmbeddingMatrix, tgt: EmbeddingMatrix, k: int) -> MinedAlignment:
    """Mine one pair per *target* row, reported in (row_a, row_b) orientation."""
    forward = mine_direction(tgt, src, k)
    pairs = tuple(sorted((a, b, s) for b, a, s in forward.pairs))
    return MinedAlignment(pairs=pairs, direction=Direction.BACKWARD)


def mine_intersection(a: EmbeddingMatrix, b: EmbeddingMatrix, k: int) -> MinedAlignment:
    """The intersection of forward and backward mining (forward margins kept)."""
    forward = mine_direction(a, b, k)
    backward_set = mine_backward(a, b, k).pair_set()
    pairs = tuple(p for p in forward.pairs if (p[0], p[1]) in backward_set)
    return MinedAlignment(pairs=pairs, direction=Direction.INTERSECTION)


def retrieval_f1(mined: MinedAlignment, gold: Iterable[tuple[int, int]]) -> RetrievalScore:
    """Score mined pairs against gold pairs; raises on an empty gold set."""
    gold_set = {(int(i), int(j)) for i, j in gold}
    if not gold_set:
        raise ValueError("gold alignment is empty")
    mined_set = mined.pair_set()
    n_correct = len(mined_set & gold_set)
    precision = n_correct / len(mined_set) if mined_set else 0.0
    recall = n_correct / len(gold_set)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return RetrievalScore(
        precision=precision,
        recall=recall,
        f1=f1,
        n_gold=len(gold_set),
        n_mined=len(mined_set),
        n_correct=n_correct,
    )


def average_margin(pair: BitextPair, k: int) -> float:
    """Mean margin score over the gold-aligned rows of a bitext pair.

    Neighbor sums for each side are computed against the full opposite
    matrix, so non-gold rows influence the normalization as distractors.
    """
    if not pair.gold:
        raise ValueError("gold alignment is empty")
    if not 1 <= k <= min(pair.mat_a.n_rows, pair.mat_b.n_rows):
        raise ValueError(f"k={k} out of range")
    a_unit = unit_rows(pair.mat_a.data)
    b_unit = unit_rows(pair.mat_b.data)
    _, a_sim = _knn_topk(a_unit, b_unit, k)
    _, b_sim = _knn_topk(b_unit, a_unit, k)
    a_sums = a_sim.sum(axis=1)
    b_sums = b_sim.sum(axis=1)

    margins = []
    for i, j in pair.gold:
        denom = a_sums[i] + b_sums[j]
        if denom <= _DENOM_FLOOR:
            raise ValueError("margin denominator is degenerate (all-orthogonal neighborhoods)")
        cos_ij = float(np.clip(a_unit[i] @ b_unit[j], -1.0, 1.0))
        margins.append(2.0 * k * cos_ij / denom)
    return float(np.mean(margins))
